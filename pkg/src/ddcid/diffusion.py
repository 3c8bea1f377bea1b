"""Stochastic basin escaping: colored intermittent diffusion from minima
toward saddles and back, plus the white-noise baseline step."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .local_search import StepController, StepUnderflowError, alignment_threshold
from .potentials import EvaluationError, Potential
from .spectral import SpectralInfo, eigendecompose, newton_solve, positive_part_pseudoinverse

logger = logging.getLogger("ddcid.diffusion")

ESCAPED = "escaped"
BUDGET_EXHAUSTED = "budget_exhausted"


class InertiaMismatchError(ValueError):
    """The point's Hessian inertia does not match the requested escape."""


class NoiseSource:
    """Seeded stream of standard-normal draws; identical seeds reproduce
    identical sequences bit-for-bit."""

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._spawn_key = tuple(_spawn_key)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self._spawn_key)))

    def normal(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size=size)

    def uniform_box(self, region: np.ndarray) -> np.ndarray:
        region = np.asarray(region, dtype=float)
        return self._gen.uniform(region[:, 0], region[:, 1])

    def integer(self, n: int) -> int:
        return int(self._gen.integers(n))

    def derive(self, index: int) -> "NoiseSource":
        """Independent child stream for repetition ``index``."""
        return NoiseSource(self.seed, self._spawn_key + (int(index),))


@dataclass
class DiffusionConfig:
    alpha: float = 1.0                          # kick amplitude
    max_diffusive_steps: int = 50
    eigenvalue_multiplicity_tol: float = 1e-8   # repeated-extremal-eigenvalue detection

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.max_diffusive_steps < 1:
            raise ValueError("max_diffusive_steps must be >= 1")


@dataclass
class TrajectoryStep:
    index: int
    point: np.ndarray
    value: float
    aux_value: float
    inertia: tuple[int, int, int]
    predictor: np.ndarray | None = None   # deterministic part of the move
    step_size: float | None = None
    predictor_aux: float | None = None    # G at the accepted predictor


@dataclass
class EscapeResult:
    point: np.ndarray
    steps: int
    outcome: str
    trajectory: list[TrajectoryStep] = field(default_factory=list)

    @property
    def escaped(self) -> bool:
        return self.outcome == ESCAPED


def _extremal_direction(s: SpectralInfo, which: str, noise: NoiseSource,
                        mult_tol: float) -> np.ndarray:
    """Extremal eigenvector, or a random unit vector in the extremal
    eigenspace when the eigenvalue is (numerically) repeated."""
    lam = s.eigenvalues
    n = lam.size
    if which == "largest":
        ref = lam[0]
        block = int(np.count_nonzero(np.abs(lam - ref) <= mult_tol * max(1.0, abs(ref))))
        cols = s.eigenvectors[:, :block]
    elif which == "smallest":
        ref = lam[-1]
        block = int(np.count_nonzero(np.abs(lam - ref) <= mult_tol * max(1.0, abs(ref))))
        cols = s.eigenvectors[:, n - block:]
    else:
        raise ValueError(f"which must be 'largest' or 'smallest', got {which!r}")
    if block == 1:
        return cols[:, 0]
    coeffs = noise.normal(block)
    norm = np.linalg.norm(coeffs)
    while norm == 0.0:   # essentially impossible; retry keeps the vector unit
        coeffs = noise.normal(block)
        norm = np.linalg.norm(coeffs)
    return cols @ (coeffs / norm)


def colored_noise(s: SpectralInfo, which: str, noise: NoiseSource,
                  mult_tol: float) -> np.ndarray:
    """Rank-one noise sigma W with sigma = -v v^T for the selected extremal
    eigenvector v (random in the eigenspace if the eigenvalue repeats)."""
    v = _extremal_direction(s, which, noise, mult_tol)
    w = noise.normal(v.size)
    return -v * float(v @ w)


def initial_kick(x0: np.ndarray, v: np.ndarray, alpha: float,
                 noise: NoiseSource) -> np.ndarray:
    """x0 + alpha v (v^T W): a random displacement confined to span{v}."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    w = noise.normal(x0.size)
    return x0 + alpha * v * float(v @ w)


def white_noise_id_step(p: Potential, x: np.ndarray, h: float, sigma: float,
                        noise: NoiseSource) -> np.ndarray:
    """One Euler-Maruyama step x - h grad g + sqrt(h) sigma W of the
    white-noise intermittent-diffusion baseline."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    return x - h * np.asarray(p.gradient(x), dtype=float) + math.sqrt(h) * sigma * noise.normal(x.size)


def _aux(p: Potential, x: np.ndarray) -> float:
    g = np.asarray(p.gradient(x), dtype=float)
    return 0.5 * float(g @ g)


def _find_predictor_step(p: Potential, x: np.ndarray, direction: np.ndarray,
                         accept) -> tuple[np.ndarray, float]:
    """Line-search the deterministic predictor step each diffusive iteration:
    start from h = 1 and halve until ``accept(x_hat)`` holds; raises
    StepUnderflowError at the lower step bound."""
    ctrl = StepController()
    while True:
        h = ctrl.current_step
        x_hat = x - h * direction
        try:
            ok = accept(x_hat)
        except EvaluationError:
            ok = False
        if ok:
            return x_hat, h
        if ctrl.at_min:
            raise StepUnderflowError("deterministic predictor line search underflowed")
        ctrl.reject()


def escape_minimum(p: Potential, x_min: np.ndarray, cfg: DiffusionConfig,
                   noise: NoiseSource, zero_tol: float | None = None) -> EscapeResult:
    """Leave the basin of a strict minimum via a kick along the dominant
    eigendirection followed by diffused damped-Newton steps.

    Each deterministic predictor x_hat = x - h H^dagger grad g must decrease
    G; rank-one noise along v1 is then added.  Stops at the first iterate
    whose Hessian has a negative eigenvalue, or when the diffusive budget
    runs out.
    """
    x_min = np.asarray(x_min, dtype=float)
    s = eigendecompose(p.hessian(x_min), zero_tol)
    if s.n_minus != 0 or s.n_zero != 0:
        raise InertiaMismatchError(
            f"escape_minimum needs a strict minimum, got inertia {s.inertia}")
    mult_tol = cfg.eigenvalue_multiplicity_tol
    v = _extremal_direction(s, "largest", noise, mult_tol)
    x = initial_kick(x_min, v, cfg.alpha, noise)
    steps = 1
    trajectory = [TrajectoryStep(1, x, float(p.value(x)), _aux(p, x), s.inertia)]

    while True:
        hess = p.hessian(x)
        s = eigendecompose(hess, zero_tol)
        # the trajectory entry was appended before its inertia was known
        trajectory[-1].inertia = s.inertia
        if s.n_minus != 0:
            return EscapeResult(x, steps, ESCAPED, trajectory)
        if steps >= cfg.max_diffusive_steps:
            return EscapeResult(x, steps, BUDGET_EXHAUSTED, trajectory)

        grad = np.asarray(p.gradient(x), dtype=float)
        aux_cur = 0.5 * float(grad @ grad)
        direction = newton_solve(hess, grad)
        x_hat, h = _find_predictor_step(
            p, x, direction, lambda cand: _aux(p, cand) < aux_cur)
        x = x_hat + cfg.alpha * math.sqrt(h) * colored_noise(s, "largest", noise, mult_tol)
        steps += 1
        trajectory.append(TrajectoryStep(
            steps, x, float(p.value(x)), _aux(p, x), s.inertia,
            predictor=x_hat, step_size=h, predictor_aux=_aux(p, x_hat)))


def escape_saddle(p: Potential, x_sad: np.ndarray, cfg: DiffusionConfig,
                  noise: NoiseSource, zero_tol: float | None = None) -> EscapeResult:
    """Leave a saddle (or maximum) via a kick along the weakest
    eigendirection followed by diffused descent steps.

    When the gradient has a meaningful positive-subspace component the
    predictor is the double-descent step and both |G| and |g| must decrease;
    otherwise the predictor is a gradient step and |g| must decrease.  Stops
    once the Hessian has no negative eigenvalues or the budget runs out.
    """
    x_sad = np.asarray(x_sad, dtype=float)
    s = eigendecompose(p.hessian(x_sad), zero_tol)
    if s.n_minus == 0 and s.n_zero == 0:
        raise InertiaMismatchError(
            f"escape_saddle cannot start from a strict minimum, inertia {s.inertia}")
    mult_tol = cfg.eigenvalue_multiplicity_tol
    n = x_sad.size
    v = _extremal_direction(s, "smallest", noise, mult_tol)
    x = initial_kick(x_sad, v, cfg.alpha, noise)
    steps = 1
    trajectory = [TrajectoryStep(1, x, float(p.value(x)), _aux(p, x), s.inertia)]
    warned_negative = False

    while True:
        hess = p.hessian(x)
        s = eigendecompose(hess, zero_tol)
        # the trajectory entry was appended before its inertia was known
        trajectory[-1].inertia = s.inertia
        if s.n_minus == 0:
            return EscapeResult(x, steps, ESCAPED, trajectory)
        if steps >= cfg.max_diffusive_steps:
            return EscapeResult(x, steps, BUDGET_EXHAUSTED, trajectory)

        grad = np.asarray(p.gradient(x), dtype=float)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm == 0.0:
            # Landed exactly on a critical point: only the noise can move us.
            x = initial_kick(x, _extremal_direction(s, "smallest", noise, mult_tol),
                             cfg.alpha, noise)
            steps += 1
            trajectory.append(TrajectoryStep(steps, x, float(p.value(x)), _aux(p, x), s.inertia))
            continue

        g_cur = float(p.value(x))
        if g_cur < 0.0 and not warned_negative:
            logger.warning(
                "escape_saddle: |g| acceptance with negative potential value "
                "%.6g; descent of g would be rejected here", g_cur)
            warned_negative = True
        aux_cur = 0.5 * grad_norm ** 2
        meaningful = (s.n_plus >= 1
                      and float(np.linalg.norm(s.positive_vectors.T @ grad)) / grad_norm
                      > alignment_threshold(n))
        if meaningful:
            direction = positive_part_pseudoinverse(s) @ grad

            def accepts(cand):
                if abs(float(p.value(cand))) >= abs(g_cur):
                    return False
                return abs(_aux(p, cand)) < abs(aux_cur)
        else:
            direction = grad

            def accepts(cand):
                return abs(float(p.value(cand))) < abs(g_cur)

        x_hat, h = _find_predictor_step(p, x, direction, accepts)
        x = x_hat + cfg.alpha * math.sqrt(h) * colored_noise(s, "smallest", noise, mult_tol)
        steps += 1
        trajectory.append(TrajectoryStep(
            steps, x, float(p.value(x)), _aux(p, x), s.inertia,
            predictor=x_hat, step_size=h, predictor_aux=_aux(p, x_hat)))
