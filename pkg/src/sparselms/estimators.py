"""LMS-family update rules and step-size schedules.

One ``iterate`` operation covers the four update rules -- plain LMS and the
three sparsity-promoting variants (zero-attracting, reweighted
zero-attracting, reweighted l1) -- parameterized by a penalty config and a
step-size schedule:

    estimate'  =  estimate + mu(n) * (e(n) * x(n) - penalty_direction)

where e(n) = y(n) - estimate . x(n).  The invariant schedule keeps mu fixed;
the iterative-promoting schedule starts at mu0, decays as mu0/n and is clamped
below by a hard floor phi, trading early convergence speed against the
steady-state error that the floor then controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .signal_model import NoiseSpec, SparseChannel, TrainingSignal

__all__ = [
    "PENALTY_KINDS",
    "SCHEDULE_KINDS",
    "DivergenceError",
    "StepSchedule",
    "PenaltyConfig",
    "FilterState",
    "initial_state",
    "step_size",
    "sgn",
    "penalty_direction",
    "iterate",
    "run_filter",
]

PENALTY_KINDS = ("none", "za", "rza", "rl1")
SCHEDULE_KINDS = ("invariant", "iterative_promoting")

_KIND_CODES = {
    "none": _kernels.KIND_NONE,
    "za": _kernels.KIND_ZA,
    "rza": _kernels.KIND_RZA,
    "rl1": _kernels.KIND_RL1,
}


class DivergenceError(ArithmeticError):
    """The estimate or error became non-finite (step size too large).

    ``iteration`` is 1-based; ``trial_index`` and ``label`` are filled in by
    the Monte-Carlo layer when applicable.
    """

    def __init__(self, iteration: int, trial_index: int | None = None, label: str | None = None):
        self.iteration = iteration
        self.trial_index = trial_index
        self.label = label
        where = f"iteration {iteration}"
        if label is not None:
            where = f"estimator '{label}', {where}"
        if trial_index is not None:
            where = f"trial {trial_index}, {where}"
        super().__init__(f"filter diverged at {where} (non-finite value; reduce the step size)")


@dataclass(frozen=True)
class StepSchedule:
    """Step-size schedule: fixed ``mu0``, or ``max(mu0 / n, phi)`` per iteration n."""

    kind: str
    mu0: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}, expected one of {SCHEDULE_KINDS}")
        if not self.mu0 > 0.0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if self.kind == "iterative_promoting":
            if not 0.0 < self.phi <= self.mu0:
                raise ValueError(
                    f"phi must satisfy 0 < phi <= mu0, got phi={self.phi}, mu0={self.mu0}"
                )
        else:
            # phi plays no role for the invariant schedule; canonicalize it so
            # equal schedules compare equal.
            object.__setattr__(self, "phi", 0.0)

    @classmethod
    def invariant(cls, mu0: float) -> "StepSchedule":
        return cls(kind="invariant", mu0=mu0)

    @classmethod
    def iterative_promoting(cls, mu0: float, phi: float) -> "StepSchedule":
        return cls(kind="iterative_promoting", mu0=mu0, phi=phi)

    def sizes(self, iterations: int) -> np.ndarray:
        """Vector of step sizes for n = 1..iterations (bit-equal to step_size)."""
        if iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {iterations}")
        if self.kind == "invariant":
            return np.full(iterations, self.mu0)
        n = np.arange(1, iterations + 1, dtype=np.float64)
        return np.maximum(self.mu0 / n, self.phi)


def step_size(schedule: StepSchedule, iteration: int) -> float:
    """mu(n) for a 1-based iteration index."""
    if iteration < 1:
        raise ValueError(f"iteration must be >= 1, got {iteration}")
    if schedule.kind == "invariant":
        return schedule.mu0
    return max(schedule.mu0 / iteration, schedule.phi)


@dataclass(frozen=True)
class PenaltyConfig:
    """Sparsity penalty: which attraction term to apply and its parameters.

    ``lam`` is the regularization weight; ``epsilon`` is the reweight of the
    rza penalty; ``delta`` is the denominator offset of the rl1 penalty.
    Parameters not used by ``kind`` are ignored.
    """

    kind: str
    lam: float = 0.0
    epsilon: float = 1.0
    delta: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}, expected one of {PENALTY_KINDS}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.kind == "rza" and not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive for rza, got {self.epsilon}")
        if self.kind == "rl1" and not self.delta > 0.0:
            raise ValueError(f"delta must be positive for rl1, got {self.delta}")
        # Canonicalize parameters the kind does not use so that semantically
        # identical configs compare equal.
        if self.kind == "none":
            object.__setattr__(self, "lam", 0.0)
        if self.kind != "rza":
            object.__setattr__(self, "epsilon", 1.0)
        if self.kind != "rl1":
            object.__setattr__(self, "delta", 1.0)

    @classmethod
    def none(cls) -> "PenaltyConfig":
        return cls(kind="none")

    @classmethod
    def za(cls, lam: float) -> "PenaltyConfig":
        return cls(kind="za", lam=lam)

    @classmethod
    def rza(cls, lam: float, epsilon: float) -> "PenaltyConfig":
        return cls(kind="rza", lam=lam, epsilon=epsilon)

    @classmethod
    def rl1(cls, lam: float, delta: float) -> "PenaltyConfig":
        return cls(kind="rl1", lam=lam, delta=delta)


@dataclass(eq=False)
class FilterState:
    """Running estimate plus the previous estimate (consumed by rl1 reweighting).

    ``iteration`` is the 1-based n fed to the step-size schedule; it increments
    by exactly one per ``iterate`` call.
    """

    estimate: np.ndarray
    prev_estimate: np.ndarray
    iteration: int = 1


def initial_state(n_taps: int) -> FilterState:
    """All-zero starting state; the conventional initialization."""
    if n_taps < 1:
        raise ValueError(f"n_taps must be positive, got {n_taps}")
    return FilterState(estimate=np.zeros(n_taps), prev_estimate=np.zeros(n_taps), iteration=1)


def sgn(v: float) -> float:
    """Three-valued sign: 1 for v > 0, 0 for v = 0, -1 for v < 0."""
    return float(np.sign(v))


def penalty_direction(config: PenaltyConfig, state: FilterState) -> np.ndarray:
    """Per-coefficient attraction vector p; the update subtracts mu(n) * p.

    none: 0
    za:   lam * sgn(h_i)
    rza:  epsilon * lam * sgn(h_i) / (1 + epsilon * |h_i|)
    rl1:  lam * sgn(h_i) / (delta + |h_prev_i|)

    Every component satisfies p_i * sgn(h_i) >= 0: the penalty only ever pulls
    coefficients toward zero.
    """
    h = state.estimate
    if config.kind == "za":
        return config.lam * np.sign(h)
    if config.kind == "rza":
        return config.epsilon * config.lam * np.sign(h) / (1.0 + config.epsilon * np.abs(h))
    if config.kind == "rl1":
        return config.lam * np.sign(h) / (config.delta + np.abs(state.prev_estimate))
    return np.zeros_like(h)


def iterate(
    state: FilterState,
    config: PenaltyConfig,
    schedule: StepSchedule,
    x: np.ndarray,
    y: float,
) -> tuple[FilterState, float]:
    """One adaptive update; returns the new state and the a-priori error e(n)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != state.estimate.shape:
        raise ValueError(f"regressor length {x.size} != estimate length {state.estimate.size}")
    mu = step_size(schedule, state.iteration)
    e = float(y - np.dot(state.estimate, x))
    p = penalty_direction(config, state)
    new_estimate = state.estimate + mu * (e * x - p)
    if not np.isfinite(e) or not np.all(np.isfinite(new_estimate)):
        raise DivergenceError(iteration=state.iteration)
    return FilterState(new_estimate, state.estimate, state.iteration + 1), e


def _filter_trace(
    taps: np.ndarray,
    samples: np.ndarray,
    observations: np.ndarray,
    config: PenaltyConfig,
    schedule: StepSchedule,
) -> np.ndarray:
    """Kernel-backed run over precomputed observations (shared by the MC layer)."""
    iterations = observations.size
    n_taps = taps.size
    xpad = np.concatenate([np.zeros(n_taps - 1), samples[:iterations]])
    mu = schedule.sizes(iterations)
    trace, diverged_at = _kernels.lms_run(
        xpad,
        np.ascontiguousarray(observations, dtype=np.float64),
        mu,
        np.ascontiguousarray(taps, dtype=np.float64),
        _KIND_CODES[config.kind],
        config.lam,
        config.epsilon,
        config.delta,
    )
    if diverged_at >= 0:
        raise DivergenceError(iteration=diverged_at + 1)
    return trace


def run_filter(
    channel: SparseChannel,
    signal: TrainingSignal,
    noise: NoiseSpec,
    config: PenaltyConfig,
    schedule: StepSchedule,
    iterations: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Adapt from an all-zero estimate and record ||h - estimate||^2 per update.

    Observations are formed as the channel output of the training signal
    (zero-prefilled before the first sample) plus white Gaussian noise drawn
    from ``rng``.  Re-running with an identically seeded generator reproduces
    the trace exactly.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if iterations > len(signal):
        raise ValueError(f"iterations {iterations} exceeds signal length {len(signal)}")
    if iterations == 0:
        return np.empty(0)
    x = signal.samples[:iterations]
    clean = np.convolve(x, channel.taps)[:iterations]
    observations = clean + noise.sigma * rng.standard_normal(iterations)
    return _filter_trace(channel.taps, x, observations, config, schedule)
