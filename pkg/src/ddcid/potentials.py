"""Benchmark objective functions and the potential abstraction.

Every potential bundles the objective g, its gradient, a (possibly
finite-difference) Hessian, and a default box used for random
initialization.  Cluster energies are expressed in reduced coordinates with
the rigid-body degrees of freedom pinned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

MIN_PAIR_DISTANCE = 1e-8      # below this, cluster energies error out
_EXP_ARG_LIMIT = 500.0        # exp argument bound keeping doubles finite


class EvaluationError(ValueError):
    """The potential cannot be evaluated at the requested point."""


@dataclass
class Potential:
    """Evaluator bundle for an objective: g, grad g, Hessian, and the
    axis-aligned search box used for random initialization."""

    dimension: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    search_region: np.ndarray    # shape (n, 2): [:, 0] lower, [:, 1] upper
    name: str = "potential"

    def __post_init__(self):
        self.search_region = np.asarray(self.search_region, dtype=float)
        if self.search_region.shape != (self.dimension, 2):
            raise ValueError("search_region must have shape (dimension, 2)")

    def region_diameter(self) -> float:
        return float(np.linalg.norm(self.search_region[:, 1] - self.search_region[:, 0]))


class AuxiliaryPotential:
    """G(x) = 0.5 * ||grad g(x)||^2, with grad G = H(x) grad g(x).

    Nonnegative everywhere and zero exactly at critical points of g.
    """

    def __init__(self, base: Potential):
        self.base = base

    def value(self, x: np.ndarray) -> float:
        g = self.base.gradient(x)
        return 0.5 * float(g @ g)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.base.hessian(x) @ self.base.gradient(x)


def fd_hessian(source: "Potential | Callable[[np.ndarray], np.ndarray]",
               x: np.ndarray, step: float | None = None) -> np.ndarray:
    """Forward-difference Jacobian of the gradient, symmetrized as (A + A^T)/2.

    ``source`` is a Potential or a bare gradient callable.  Default step is
    sqrt(machine eps) * max(1, ||x||_inf).
    """
    gradient = source.gradient if isinstance(source, Potential) else source
    x = np.asarray(x, dtype=float)
    if step is None:
        step = math.sqrt(np.finfo(float).eps) * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
    if step <= 0:
        raise ValueError("step must be positive")
    n = x.size
    g0 = np.asarray(gradient(x), dtype=float)
    cols = np.empty((n, n))
    for j in range(n):
        xp = x.copy()
        xp[j] += step
        cols[:, j] = (np.asarray(gradient(xp), dtype=float) - g0) / step
    return 0.5 * (cols + cols.T)


# ---------------------------------------------------------------------------
# Analytic 2-D test functions
# ---------------------------------------------------------------------------

def make_molei() -> Potential:
    """g(x, y) = (x^2 - 1)^2 + (x^2 + y - 1)^2.

    Two minima at (+-1, 0) and a saddle at (0, 1).
    """

    def value(p):
        x, y = p
        return (x * x - 1.0) ** 2 + (x * x + y - 1.0) ** 2

    def gradient(p):
        x, y = p
        return np.array([
            4.0 * x * (x * x - 1.0) + 4.0 * x * (x * x + y - 1.0),
            2.0 * (x * x + y - 1.0),
        ])

    def hessian(p):
        x, y = p
        return np.array([
            [24.0 * x * x + 4.0 * y - 8.0, 4.0 * x],
            [4.0 * x, 2.0],
        ])

    region = np.array([[-3.0, 3.0], [-3.0, 3.0]])
    return Potential(2, value, gradient, hessian, region, name="molei")


def _shubert_sum(t: float) -> tuple[float, float, float]:
    """One Shubert factor f(t) = sum_i i*cos((i+1)t + i) with f', f''."""
    f = fp = fpp = 0.0
    for i in range(1, 6):
        arg = (i + 1.0) * t + i
        f += i * math.cos(arg)
        fp -= i * (i + 1.0) * math.sin(arg)
        fpp -= i * (i + 1.0) ** 2 * math.cos(arg)
    return f, fp, fpp


def make_shubert() -> Potential:
    """Separable product of two five-term cosine sums; highly multimodal."""

    def value(p):
        x, y = p
        return _shubert_sum(x)[0] * _shubert_sum(y)[0]

    def gradient(p):
        x, y = p
        fx, fpx, _ = _shubert_sum(x)
        fy, fpy, _ = _shubert_sum(y)
        return np.array([fpx * fy, fx * fpy])

    def hessian(p):
        x, y = p
        fx, fpx, fppx = _shubert_sum(x)
        fy, fpy, fppy = _shubert_sum(y)
        return np.array([[fppx * fy, fpx * fpy], [fpx * fpy, fx * fppy]])

    region = np.array([[-10.0, 10.0], [-10.0, 10.0]])
    return Potential(2, value, gradient, hessian, region, name="shubert")


_BIGGS_T = 0.1 * np.arange(1, 11)
# Data generated by the model at (1, 10); with this choice (1, 10) is an
# exact zero-residual minimum and (16.7047, 16.7047) is a saddle.
_BIGGS_Y = np.exp(-_BIGGS_T) - 5.0 * np.exp(-10.0 * _BIGGS_T)


def make_biggs() -> Potential:
    """Two-exponential least-squares fit g = sum_i (e^{-t_i x1} - 5 e^{-t_i x2} - y_i)^2."""

    def _terms(p):
        x1, x2 = p
        if -_BIGGS_T[-1] * min(x1, x2) > _EXP_ARG_LIMIT:
            raise EvaluationError(f"biggs: exponential overflow at {p!r}")
        e1 = np.exp(-_BIGGS_T * x1)
        e2 = np.exp(-_BIGGS_T * x2)
        r = e1 - 5.0 * e2 - _BIGGS_Y
        return e1, e2, r

    def value(p):
        _, _, r = _terms(p)
        return float(r @ r)

    def gradient(p):
        e1, e2, r = _terms(p)
        d1 = -_BIGGS_T * e1
        d2 = 5.0 * _BIGGS_T * e2
        return np.array([2.0 * float(r @ d1), 2.0 * float(r @ d2)])

    def hessian(p):
        e1, e2, r = _terms(p)
        d1 = -_BIGGS_T * e1
        d2 = 5.0 * _BIGGS_T * e2
        h11 = 2.0 * float(d1 @ d1 + r @ (_BIGGS_T ** 2 * e1))
        h22 = 2.0 * float(d2 @ d2 + r @ (-5.0 * _BIGGS_T ** 2 * e2))
        h12 = 2.0 * float(d1 @ d2)
        return np.array([[h11, h12], [h12, h22]])

    region = np.array([[0.0, 25.0], [0.0, 25.0]])
    return Potential(2, value, gradient, hessian, region, name="biggs")


def make_camel() -> Potential:
    """Six-hump camel: (4 - 2.1 x^2 + x^4/3) x^2 + x y + 4 (y^2 - 1) y^2."""

    def value(p):
        x, y = p
        return (4.0 - 2.1 * x * x + x ** 4 / 3.0) * x * x + x * y + 4.0 * (y * y - 1.0) * y * y

    def gradient(p):
        x, y = p
        return np.array([
            8.0 * x - 8.4 * x ** 3 + 2.0 * x ** 5 + y,
            x + 16.0 * y ** 3 - 8.0 * y,
        ])

    def hessian(p):
        x, y = p
        return np.array([
            [8.0 - 25.2 * x * x + 10.0 * x ** 4, 1.0],
            [1.0, 48.0 * y * y - 8.0],
        ])

    region = np.array([[-2.0, 2.0], [-1.0, 1.0]])
    return Potential(2, value, gradient, hessian, region, name="camel")


def make_rosenbrock(n: int) -> Potential:
    """Chained Rosenbrock sum_i 100 (x_{i+1} - x_i^2)^2 + (x_i - 1)^2 with a
    tridiagonal analytic Hessian."""
    if n < 2:
        raise ValueError("rosenbrock needs dimension >= 2")

    def value(x):
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2))

    def gradient(x):
        g = np.zeros_like(x)
        diff = x[1:] - x[:-1] ** 2
        g[:-1] += -400.0 * x[:-1] * diff + 2.0 * (x[:-1] - 1.0)
        g[1:] += 200.0 * diff
        return g

    def hessian(x):
        h = np.zeros((n, n))
        d = np.zeros(n)
        d[:-1] += 1200.0 * x[:-1] ** 2 - 400.0 * x[1:] + 2.0
        d[1:] += 200.0
        off = -400.0 * x[:-1]
        h[np.arange(n), np.arange(n)] = d
        h[np.arange(n - 1), np.arange(1, n)] = off
        h[np.arange(1, n), np.arange(n - 1)] = off
        return h

    region = np.tile([-5.0, 10.0], (n, 1))
    return Potential(n, value, gradient, hessian, region, name=f"rosenbrock:{n}")


# ---------------------------------------------------------------------------
# Atomic cluster potentials in reduced coordinates
# ---------------------------------------------------------------------------

class ClusterCoordinates:
    """Reduced coordinates for d atoms in R^3 with rigid motions pinned:
    atom 1 at the origin, atom 2 on the x axis, atom 3 in the xy plane.

    The free vector is X = (x2, x3, y3, x4, y4, z4, ..., x_d, y_d, z_d),
    of dimension 3d - 6 for d >= 3 and 1 for d = 2.
    """

    def __init__(self, atom_count: int):
        if atom_count < 2:
            raise ValueError("need at least two atoms")
        self.atom_count = atom_count
        self.dimension = 1 if atom_count == 2 else 3 * atom_count - 6

    def positions(self, reduced: np.ndarray) -> np.ndarray:
        reduced = np.asarray(reduced, dtype=float)
        if reduced.size != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {reduced.size}")
        d = self.atom_count
        pos = np.zeros((d, 3))
        pos[1, 0] = reduced[0]
        if d >= 3:
            pos[2, 0] = reduced[1]
            pos[2, 1] = reduced[2]
        if d >= 4:
            pos[3:] = reduced[3:].reshape(d - 3, 3)
        return pos

    def project_forces(self, forces: np.ndarray) -> np.ndarray:
        """Map per-atom gradients (d, 3) onto the free coordinates."""
        d = self.atom_count
        out = np.empty(self.dimension)
        out[0] = forces[1, 0]
        if d >= 3:
            out[1] = forces[2, 0]
            out[2] = forces[2, 1]
        if d >= 4:
            out[3:] = forces[3:].reshape(-1)
        return out


def _cluster_region(coords: ClusterCoordinates) -> np.ndarray:
    # Box wide enough to hold the equilibrium cluster but dense enough that a
    # random draw usually has interacting atoms.
    half = max(1.5, 0.9 * coords.atom_count ** (1.0 / 3.0))
    return np.tile([-half, half], (coords.dimension, 1))


def _make_cluster_potential(name: str, coords: ClusterCoordinates,
                            pair_value: Callable[[np.ndarray], np.ndarray],
                            pair_deriv: Callable[[np.ndarray], np.ndarray]) -> Potential:
    """Pairwise energy sum over atoms with analytic gradient and FD Hessian."""
    d = coords.atom_count
    iu, ju = np.triu_indices(d, k=1)

    def _distances(pos):
        sep = pos[ju] - pos[iu]
        r = np.linalg.norm(sep, axis=1)
        if np.any(r < MIN_PAIR_DISTANCE):
            raise EvaluationError(f"{name}: coincident atoms (pair distance below floor)")
        return sep, r

    def value(x):
        _, r = _distances(coords.positions(x))
        return float(np.sum(pair_value(r)))

    def gradient(x):
        pos = coords.positions(x)
        sep, r = _distances(pos)
        # dV/dP_k = sum_j phi'(r_kj) (P_k - P_j) / r_kj
        w = pair_deriv(r) / r
        forces = np.zeros((d, 3))
        np.add.at(forces, iu, -w[:, None] * sep)
        np.add.at(forces, ju, w[:, None] * sep)
        return coords.project_forces(forces)

    def hessian(x):
        return fd_hessian(gradient, x)

    return Potential(coords.dimension, value, gradient, hessian,
                     _cluster_region(coords), name=name)


def make_lennard_jones(d: int) -> Potential:
    """Lennard-Jones cluster of d atoms, 4 sum (r^-12 - r^-6), eps = sigma = 1."""
    coords = ClusterCoordinates(d)

    def pair_value(r):
        inv6 = r ** -6.0
        return 4.0 * (inv6 * inv6 - inv6)

    def pair_deriv(r):
        inv7 = r ** -7.0
        return 24.0 * inv7 - 48.0 * inv7 * r ** -6.0

    return _make_cluster_potential(f"lj:{d}", coords, pair_value, pair_deriv)


def make_morse(d: int, rho: float) -> Potential:
    """Morse cluster: sum e^{rho(1-r)} (e^{rho(1-r)} - 2); rho sets the well width."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    coords = ClusterCoordinates(d)

    def pair_value(r):
        arg = rho * (1.0 - r)
        if np.any(arg > _EXP_ARG_LIMIT):
            raise EvaluationError(f"morse: exponential overflow (rho={rho})")
        e = np.exp(arg)
        return e * (e - 2.0)

    def pair_deriv(r):
        arg = rho * (1.0 - r)
        if np.any(arg > _EXP_ARG_LIMIT):
            raise EvaluationError(f"morse: exponential overflow (rho={rho})")
        e = np.exp(arg)
        return -2.0 * rho * e * (e - 1.0)

    return _make_cluster_potential(f"morse:{d}:{rho:g}", coords, pair_value, pair_deriv)


# ---------------------------------------------------------------------------
# Nonlinear systems via sum of squares
# ---------------------------------------------------------------------------

@dataclass
class NonlinearSystem:
    """Square nonlinear system S(x) = 0 together with its Jacobian."""

    dimension: int
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    name: str = "system"


def make_boggs() -> NonlinearSystem:
    """S(x, y) = (x^2 - y + 1, x - cos(pi y / 2)); three real roots."""

    def residual(p):
        x, y = p
        return np.array([x * x - y + 1.0, x - math.cos(0.5 * math.pi * y)])

    def jacobian(p):
        x, y = p
        return np.array([
            [2.0 * x, -1.0],
            [1.0, 0.5 * math.pi * math.sin(0.5 * math.pi * y)],
        ])

    return NonlinearSystem(2, residual, jacobian, name="boggs")


def sum_of_squares(system: NonlinearSystem,
                   search_region: np.ndarray | None = None) -> Potential:
    """Potential g = 0.5 S^T S with grad g = J_S^T S and FD Hessian.

    Zeros of S are exactly the global minima of g with value 0.
    """

    def value(x):
        s = system.residual(x)
        return 0.5 * float(s @ s)

    def gradient(x):
        return system.jacobian(x).T @ system.residual(x)

    def hessian(x):
        return fd_hessian(gradient, x)

    if search_region is None:
        search_region = np.tile([-5.0, 5.0], (system.dimension, 1))
    return Potential(system.dimension, value, gradient, hessian,
                     np.asarray(search_region, dtype=float), name=system.name)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_FIXED_PROBLEMS: dict[str, Callable[[], Potential]] = {
    "molei": make_molei,
    "shubert": make_shubert,
    "biggs": make_biggs,
    "camel": make_camel,
    "boggs": lambda: sum_of_squares(make_boggs()),
}


def available_problems() -> list[str]:
    return sorted(_FIXED_PROBLEMS) + ["rosenbrock:<N>", "lj:<d>", "morse:<d>:<rho>"]


def get_potential(key: str) -> Potential:
    """Resolve a registry key such as ``camel``, ``rosenbrock:50``, ``lj:13``
    or ``morse:11:3``."""
    if key in _FIXED_PROBLEMS:
        return _FIXED_PROBLEMS[key]()
    parts = key.split(":")
    try:
        if parts[0] == "rosenbrock" and len(parts) == 2:
            return make_rosenbrock(int(parts[1]))
        if parts[0] == "lj" and len(parts) == 2:
            return make_lennard_jones(int(parts[1]))
        if parts[0] == "morse" and len(parts) == 3:
            return make_morse(int(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise KeyError(f"bad parameters in problem key {key!r}: {exc}") from exc
    raise KeyError(f"unknown problem key {key!r}")
