"""Seeded Monte-Carlo ensembles and dB-scale deviation curves.

Each trial derives its own random stream from (master_seed, trial_index), so
results are reproducible and independent of execution order or thread count.
Within one trial every estimator sees the same channel, training signal, and
noise realization, which makes algorithm comparisons paired.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .estimators import DivergenceError, PenaltyConfig, StepSchedule, _filter_trace
from .signal_model import NoiseSpec, generate_prbs, generate_sparse_channel

__all__ = [
    "MSE_DB_FLOOR",
    "EstimatorSpec",
    "ExperimentConfig",
    "MseCurve",
    "canonical_estimator_specs",
    "mse_db",
    "run_trial",
    "run_experiment",
    "run_sweep",
    "steady_state_db",
]

# Floor on the averaged squared deviation before the dB mapping; keeps curves
# finite in pathological noiseless configs and is far below any reachable MSE.
MSE_DB_FLOOR = 1e-12

# Default simulation parameters (channel/signal/step/penalty settings used
# throughout unless overridden).
DEFAULT_N_TAPS = 128
DEFAULT_K_NONZERO = 4
DEFAULT_SNR_DB = 10.0
DEFAULT_ITERATIONS = 3000
DEFAULT_TRIALS = 1000
DEFAULT_MASTER_SEED = 1
DEFAULT_MU_UPPER = 0.005
DEFAULT_PHI = 0.0005
DEFAULT_LAM_ZA = 0.004
DEFAULT_LAM_RZA = 0.002
DEFAULT_EPSILON = 20.0
DEFAULT_LAM_RL1 = 0.004
DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class EstimatorSpec:
    """A labeled (penalty, schedule) combination to run and plot."""

    label: str
    penalty: PenaltyConfig
    schedule: StepSchedule


def canonical_estimator_specs(
    mu_upper: float = DEFAULT_MU_UPPER,
    phi: float = DEFAULT_PHI,
    lam_za: float = DEFAULT_LAM_ZA,
    lam_rza: float = DEFAULT_LAM_RZA,
    epsilon: float = DEFAULT_EPSILON,
    lam_rl1: float = DEFAULT_LAM_RL1,
    delta: float = DEFAULT_DELTA,
) -> tuple[EstimatorSpec, ...]:
    """The canonical 12-spec comparison grid: 4 algorithms x 3 schedules.

    Schedules: invariant at mu_upper, invariant at phi, and the
    iterative-promoting schedule running from mu_upper down to phi.
    """
    penalties = (
        ("LMS", PenaltyConfig.none()),
        ("ZA", PenaltyConfig.za(lam_za)),
        ("RZA", PenaltyConfig.rza(lam_rza, epsilon)),
        ("RL1", PenaltyConfig.rl1(lam_rl1, delta)),
    )
    schedules = (
        (f"ISS-{mu_upper:g}", StepSchedule.invariant(mu_upper)),
        (f"ISS-{phi:g}", StepSchedule.invariant(phi)),
        ("IPVSS", StepSchedule.iterative_promoting(mu_upper, phi)),
    )
    return tuple(
        EstimatorSpec(label=f"{algo}-{tag}", penalty=pen, schedule=sched)
        for algo, pen in penalties
        for tag, sched in schedules
    )


def _validate_label(label: str) -> None:
    if not label:
        raise ValueError("estimator label must be non-empty")
    if any(ch in label for ch in ",\n\r"):
        raise ValueError(f"estimator label {label!r} contains a comma or newline (not CSV-safe)")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte-Carlo experiment."""

    n_taps: int = DEFAULT_N_TAPS
    k_nonzero: int = DEFAULT_K_NONZERO
    snr_db: float = DEFAULT_SNR_DB
    iterations: int = DEFAULT_ITERATIONS
    trials: int = DEFAULT_TRIALS
    master_seed: int = DEFAULT_MASTER_SEED
    normalize_channel: bool = True
    estimator_specs: tuple[EstimatorSpec, ...] = field(default_factory=canonical_estimator_specs)

    def __post_init__(self) -> None:
        if self.n_taps < 1:
            raise ValueError(f"n_taps must be positive, got {self.n_taps}")
        if not 0 < self.k_nonzero <= self.n_taps:
            raise ValueError(
                f"k_nonzero must satisfy 0 < k <= n_taps, got k={self.k_nonzero}, n_taps={self.n_taps}"
            )
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        object.__setattr__(self, "estimator_specs", tuple(self.estimator_specs))
        if not self.estimator_specs:
            raise ValueError("estimator_specs must be non-empty")
        labels = [spec.label for spec in self.estimator_specs]
        for label in labels:
            _validate_label(label)
        if len(set(labels)) != len(labels):
            raise ValueError(f"estimator labels must be unique, got {labels}")

    def spec_by_label(self, label: str) -> EstimatorSpec:
        for spec in self.estimator_specs:
            if spec.label == label:
                return spec
        raise ValueError(f"unknown estimator label {label!r}")


@dataclass(eq=False)
class MseCurve:
    """Per-iteration 10*log10 of the trial-averaged squared deviation."""

    label: str
    mse_db: np.ndarray
    trials_used: int


def mse_db(avg_sq_dev: float) -> float:
    """Map an averaged squared deviation to dB, floored at MSE_DB_FLOOR."""
    if avg_sq_dev < 0.0:
        raise ValueError(f"averaged squared deviation must be >= 0, got {avg_sq_dev}")
    return 10.0 * math.log10(max(avg_sq_dev, MSE_DB_FLOOR))


def _mse_db_vec(avg_sq_dev: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(avg_sq_dev, MSE_DB_FLOOR))


def steady_state_db(curve: np.ndarray, window_frac: float = 0.1) -> float:
    """Mean of the final stretch of a dB curve (default: last 10% of iterations)."""
    curve = np.asarray(curve)
    if curve.size == 0:
        raise ValueError("cannot summarize an empty curve")
    window = max(1, int(round(window_frac * curve.size)))
    return float(np.mean(curve[-window:]))


def _trial_traces(config: ExperimentConfig, trial_index: int, specs) -> list[np.ndarray]:
    """Traces for the given specs on one trial's shared realization.

    The stream derivation and draw order (channel, signal, noise) depend only
    on (master_seed, trial_index), never on which specs are being run.
    """
    rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, trial_index]))
    channel = generate_sparse_channel(
        config.n_taps, config.k_nonzero, rng, normalize=config.normalize_channel
    )
    signal = generate_prbs(config.iterations, rng)
    noise = NoiseSpec(snr_db=config.snr_db)
    x = signal.samples
    clean = np.convolve(x, channel.taps)[: config.iterations]
    observations = clean + noise.sigma * rng.standard_normal(config.iterations)
    traces = []
    for spec in specs:
        try:
            traces.append(_filter_trace(channel.taps, x, observations, spec.penalty, spec.schedule))
        except DivergenceError as exc:
            raise DivergenceError(
                iteration=exc.iteration, trial_index=trial_index, label=spec.label
            ) from None
    return traces


def run_trial(config: ExperimentConfig, trial_index: int, spec_label: str) -> np.ndarray:
    """Squared-deviation trace of one estimator on one trial's realization."""
    if not 0 <= trial_index < config.trials:
        raise ValueError(f"trial_index {trial_index} out of range for {config.trials} trials")
    spec = config.spec_by_label(spec_label)
    return _trial_traces(config, trial_index, [spec])[0]


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> list[MseCurve]:
    """Average the squared deviation over all trials and convert to dB curves.

    Output order matches ``config.estimator_specs``.  Results are identical
    for any ``threads`` value: trials are independent and the accumulator
    always adds them in trial-index order.  A diverged trial aborts the whole
    experiment (it signals misconfiguration, not data to average).
    """
    specs = config.estimator_specs
    acc = [np.zeros(config.iterations) for _ in specs]
    _kernels.warmup()

    if threads is None or threads <= 1:
        for t in range(config.trials):
            for a, trace in zip(acc, _trial_traces(config, t, specs)):
                a += trace
    else:
        # Windowed submission bounds memory; completed trials are buffered and
        # folded in strictly by index so the floating-point sum is fixed.
        window = max(1, 4 * threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = {}
            buffered: dict[int, list[np.ndarray]] = {}
            next_to_fold = 0
            next_to_submit = 0
            while next_to_fold < config.trials:
                while next_to_submit < config.trials and len(pending) < window:
                    fut = pool.submit(_trial_traces, config, next_to_submit, specs)
                    pending[fut] = next_to_submit
                    next_to_submit += 1
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    buffered[pending.pop(fut)] = fut.result()
                while next_to_fold in buffered:
                    for a, trace in zip(acc, buffered.pop(next_to_fold)):
                        a += trace
                    next_to_fold += 1

    return [
        MseCurve(label=spec.label, mse_db=_mse_db_vec(a / config.trials), trials_used=config.trials)
        for spec, a in zip(specs, acc)
    ]


SWEEP_AXES = ("snr", "k", "phi")


def _substitute_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "snr":
        return dataclasses.replace(config, snr_db=float(value))
    if axis == "k":
        return dataclasses.replace(config, k_nonzero=int(value))
    if axis == "phi":
        specs = tuple(
            dataclasses.replace(
                spec,
                schedule=dataclasses.replace(spec.schedule, phi=float(value)),
            )
            if spec.schedule.kind == "iterative_promoting"
            else spec
            for spec in config.estimator_specs
        )
        return dataclasses.replace(config, estimator_specs=specs)
    raise ValueError(f"unknown sweep axis {axis!r}, expected one of {SWEEP_AXES}")


def run_sweep(
    config: ExperimentConfig,
    axis: str,
    values,
    threads: int | None = None,
) -> list[tuple[float, list[MseCurve]]]:
    """Run the experiment once per axis value, same master seed throughout."""
    values = list(values)
    if not values:
        raise ValueError("sweep values must be non-empty")
    results = []
    for value in values:
        sub = _substitute_axis(config, axis, value)
        results.append((value, run_experiment(sub, threads=threads)))
    return results
