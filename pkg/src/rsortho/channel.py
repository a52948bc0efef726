"""Channel generation, effective-channel composition and uplink simulation.

The uplink model is ``Y = H S + N`` with ``H = H0 + H1 Theta H2`` and noise
entries drawn IID from CN(0, N0).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidDims
from .linalg_core import STREAM_CHANNEL, STREAM_NOISE, as_cmatrix, complex_gaussian, make_rng
from .surface import RsConfig


@dataclass(frozen=True)
class ChannelSet:
    """Direct (M x K), BS-RS (M x N) and RS-UE (N x K) channels."""

    h0: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    e0: float

    def __post_init__(self):
        h0, h1, h2 = (as_cmatrix(x) for x in (self.h0, self.h1, self.h2))
        m, k = h0.shape
        if h1.shape[0] != m or h2.shape[1] != k or h1.shape[1] != h2.shape[0]:
            raise DimensionMismatch(
                f"inconsistent shapes H0 {h0.shape}, H1 {h1.shape}, H2 {h2.shape}"
            )
        for name, x in (("h0", h0), ("h1", h1), ("h2", h2)):
            x.setflags(write=False)
            object.__setattr__(self, name, x)
        object.__setattr__(self, "e0", float(self.e0))

    @property
    def m(self):
        return self.h0.shape[0]

    @property
    def k(self):
        return self.h0.shape[1]

    @property
    def n(self):
        return self.h1.shape[1]


@dataclass(frozen=True)
class RxBlock:
    samples: np.ndarray
    noise_power: float
    symbol_energy: float


def _normalized(rng, shape, power):
    x = complex_gaussian(rng, shape)
    if power == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    return x * np.sqrt(power / np.sum(np.abs(x) ** 2))


def generate_iid_rayleigh(m, k, n, e0, seed):
    """Draw an IID Rayleigh :class:`ChannelSet` with exact Frobenius normalization.

    ``||H0||^2 = e0 M K``, ``||H1||^2 = M N`` and ``||H2||^2 = N K`` hold for
    every realization, not only in expectation.
    """
    if not (m > k >= 1):
        raise InvalidDims(f"need M > K >= 1, got M={m}, K={k}")
    if n < 0:
        raise InvalidDims(f"need N >= 0, got {n}")
    if e0 < 0:
        raise InvalidDims(f"need e0 >= 0, got {e0}")
    rng = make_rng(seed, STREAM_CHANNEL)
    h0 = _normalized(rng, (m, k), e0 * m * k)
    h1 = _normalized(rng, (m, n), m * n)
    h2 = _normalized(rng, (n, k), n * k)
    return ChannelSet(h0, h1, h2, e0)


def effective_channel(cs, theta):
    """``H0 + H1 Theta H2`` for an :class:`RsConfig` or a raw ``n x n`` matrix."""
    mat = theta.matrix() if isinstance(theta, RsConfig) else as_cmatrix(theta)
    if mat.shape != (cs.n, cs.n):
        raise DimensionMismatch(f"reflection matrix {mat.shape} does not match N={cs.n}")
    return cs.h0 + cs.h1 @ mat @ cs.h2


def simulate_uplink(h, s, n0, seed, es=1.0):
    """Receive ``H S + noise`` with noise variance ``n0`` per complex entry."""
    h = as_cmatrix(h)
    s = as_cmatrix(s)
    if s.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"S has {s.shape[0]} rows, H has {h.shape[1]} columns")
    if n0 < 0:
        raise ValueError("noise power must be non-negative")
    y = h @ s
    if n0 > 0:
        rng = make_rng(seed, STREAM_NOISE)
        y = y + np.sqrt(n0) * complex_gaussian(rng, y.shape)
    return RxBlock(y, float(n0), float(es))


def post_snr(beta, es, n0):
    """Post-MRC SNR per UE of an orthogonal channel with gain ``beta``."""
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    return beta * es / n0
