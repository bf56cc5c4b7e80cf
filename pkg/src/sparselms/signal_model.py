"""Sparse channels, binary training signals, and the noisy observation model.

Everything here is pure given an explicit ``numpy.random.Generator``; callers
that need reproducibility or paired realizations own the stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SparseChannel",
    "TrainingSignal",
    "NoiseSpec",
    "generate_sparse_channel",
    "generate_prbs",
    "noise_sigma_from_snr",
    "regressor",
    "observe",
]


@dataclass(eq=False)
class SparseChannel:
    """FIR channel of length ``n_taps`` with exactly ``k_nonzero`` nonzero taps.

    ``support`` holds the sorted indices of the nonzero taps.
    """

    taps: np.ndarray
    support: np.ndarray

    @property
    def n_taps(self) -> int:
        return int(self.taps.size)

    @property
    def k_nonzero(self) -> int:
        return int(self.support.size)

    def energy(self) -> float:
        return float(np.sum(self.taps**2))


@dataclass(eq=False)
class TrainingSignal:
    """Binary training sequence; every sample is exactly +1.0 or -1.0."""

    samples: np.ndarray

    def __len__(self) -> int:
        return int(self.samples.size)


def noise_sigma_from_snr(snr_db: float, es: float = 1.0) -> float:
    """Noise standard deviation for a given SNR in dB and signal power ``es``.

    sigma = sqrt(es * 10**(-snr_db / 10))
    """
    if not es > 0.0:
        raise ValueError(f"signal power es must be positive, got {es}")
    return math.sqrt(es * 10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN level, derived from the SNR so sigma can never go out of sync."""

    snr_db: float
    es: float = 1.0
    sigma: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", noise_sigma_from_snr(self.snr_db, self.es))


def generate_sparse_channel(
    n_taps: int,
    k_nonzero: int,
    rng: np.random.Generator,
    normalize: bool = True,
) -> SparseChannel:
    """Draw a channel with ``k_nonzero`` Gaussian taps at uniform random positions.

    With ``normalize`` (the default) the taps are scaled to unit energy so that
    deviation curves in dB are comparable across random channels.
    """
    if n_taps < 1:
        raise ValueError(f"n_taps must be positive, got {n_taps}")
    if not 0 < k_nonzero <= n_taps:
        raise ValueError(
            f"k_nonzero must satisfy 0 < k <= n_taps, got k={k_nonzero}, n_taps={n_taps}"
        )
    support = np.sort(rng.choice(n_taps, size=k_nonzero, replace=False))
    values = rng.standard_normal(k_nonzero)
    while np.any(values == 0.0):  # astronomically rare; keeps the support exact
        values[values == 0.0] = rng.standard_normal(int(np.sum(values == 0.0)))
    if normalize:
        values /= math.sqrt(float(np.sum(values**2)))
    taps = np.zeros(n_taps)
    taps[support] = values
    return SparseChannel(taps=taps, support=support)


def generate_prbs(length: int, rng: np.random.Generator) -> TrainingSignal:
    """Pseudo-random binary sequence: i.i.d. samples, each +1 or -1 with p=1/2."""
    if length < 1:
        raise ValueError(f"length must be positive, got {length}")
    samples = 2.0 * rng.integers(0, 2, size=length).astype(np.float64) - 1.0
    return TrainingSignal(samples=samples)


def regressor(signal: TrainingSignal, n: int, n_taps: int) -> np.ndarray:
    """Length-``n_taps`` input window [x(n), x(n-1), ..., x(n-N+1)].

    Indices before the start of the signal read as zero, so every window has
    the same length regardless of ``n``.
    """
    samples = signal.samples
    if not 0 <= n < samples.size:
        raise ValueError(f"sample index {n} out of range for signal of length {samples.size}")
    if n_taps < 1:
        raise ValueError(f"n_taps must be positive, got {n_taps}")
    window = np.zeros(n_taps)
    m = min(n + 1, n_taps)
    window[:m] = samples[n - m + 1 : n + 1][::-1]
    return window


def observe(
    channel: SparseChannel,
    regressor_vec: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
) -> float:
    """One noisy channel output: taps . window + sigma * N(0, 1).

    The inner product is accumulated with ``math.fsum`` so it is exactly
    rounded; for +/-1 (or zero-prefilled) windows the products themselves are
    exact, making the noiseless output the true inner product.
    """
    if regressor_vec.shape != channel.taps.shape:
        raise ValueError(
            f"regressor length {regressor_vec.size} != channel length {channel.taps.size}"
        )
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    clean = math.fsum(channel.taps * regressor_vec)
    return clean + sigma * float(rng.standard_normal())
