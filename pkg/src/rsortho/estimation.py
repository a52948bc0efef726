"""Pilot protocols by which the BS learns what it needs to configure the surface.

ARIS: estimate H0 with the surface off (K slots), then switch on one element
at a time and estimate each rank-one term ``h1n h2n^T`` (N K slots).

FRIS: estimate H0 (K slots), receive N pilots sent by the surface itself to
estimate H1, then switch on groups of M elements to recover H2 block by block
(ceil(N/M) K slots).

All estimators are plain least squares.  Noise is only ever added through
:func:`~rsortho.channel.simulate_uplink`; the ARIS protocol sees H1 and H2
only through received samples.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import effective_channel, simulate_uplink
from .errors import IllConditionedBlock, InfeasibleN
from .linalg_core import as_cmatrix, left_pinv, vec
from .orthogonalizer import aris_coefficients, fris_matrix, min_elements
from .surface import RsConfig, SurfaceKind

BLOCK_RCOND = 1e-10

# Sub-seed tags so each transmission in a protocol gets independent noise.
_STEP_H0, _STEP_CASCADE, _STEP_H1, _STEP_H2 = 1, 2, 3, 4


@dataclass(frozen=True)
class PilotPlan:
    """Known pilots plus the noise and symbol-energy levels of the uplink.

    ``pilot_matrix`` defaults to ``I_K``.  Transmitted pilots are
    ``sqrt(es) * pilot_matrix``.
    """

    pilot_matrix: np.ndarray = None
    n0: float = 0.0
    es: float = 1.0

    def pilots(self, k):
        p = np.eye(k, dtype=np.complex128) if self.pilot_matrix is None else as_cmatrix(self.pilot_matrix)
        if p.shape != (k, k):
            raise ValueError(f"pilot matrix must be {k}x{k}, got {p.shape}")
        return np.sqrt(self.es) * p


class LowerBound(int):
    """An integer that is a lower bound rather than an exact count."""

    is_bound = True


@dataclass
class EstimationReport:
    kind: SurfaceKind
    h0_hat: np.ndarray
    config: RsConfig
    pilot_slots_used: int
    residual: float
    cascade_hat: np.ndarray = None
    h1_hat: np.ndarray = None
    h2_hat: np.ndarray = None
    ledger: list = field(default_factory=list)


def _seed(seed, *tags):
    base = (seed,) if isinstance(seed, (int, np.integer)) else tuple(seed)
    return base + tags


def _ls(y, s):
    return y @ np.linalg.inv(s)


def _log(ledger, step, slots):
    if ledger is not None:
        ledger.append((step, slots))


def estimate_h0(cs, plan, seed, ledger=None):
    """LS estimate of H0 from K slots with the surface switched off.

    If ``ledger`` is a list, ``(step, slots)`` entries are appended to it for
    every transmission; the same holds for the other protocol steps.
    """
    s = plan.pilots(cs.k)
    h = effective_channel(cs, np.zeros((cs.n, cs.n)))
    rx = simulate_uplink(h, s, plan.n0, _seed(seed, _STEP_H0), plan.es)
    _log(ledger, "h0", s.shape[1])
    return _ls(rx.samples, s)


def aris_estimate_cascade(cs, h0_hat, plan, seed, ledger=None):
    """Estimate the MK x N cascade matrix one element at a time.

    Every column is the vectorized best rank-one approximation of the LS
    estimate.
    """
    s = plan.pilots(cs.k)
    h0_hat = as_cmatrix(h0_hat)
    cols = []
    for idx in range(cs.n):
        alpha = np.zeros(cs.n, dtype=np.complex128)
        alpha[idx] = 1.0
        h = effective_channel(cs, RsConfig.aris(alpha))
        rx = simulate_uplink(h, s, plan.n0, _seed(seed, _STEP_CASCADE, idx), plan.es)
        _log(ledger, f"cascade[{idx + 1}]", s.shape[1])
        outer = _ls(rx.samples - h0_hat @ s, s)
        u, sv, vh = np.linalg.svd(outer)
        rank1 = sv[0] * np.outer(u[:, 0], vh[0, :])
        cols.append(vec(rank1))
    if not cols:
        return np.zeros((cs.m * cs.k, 0), dtype=np.complex128)
    return np.hstack(cols)


def fris_estimate_h1(cs, plan, seed, ledger=None):
    """LS estimate of H1 from N pilots sent by the FRIS elements (P = I_N)."""
    s = np.sqrt(plan.es) * np.eye(cs.n, dtype=np.complex128)
    rx = simulate_uplink(cs.h1, s, plan.n0, _seed(seed, _STEP_H1), plan.es)
    _log(ledger, "h1", cs.n)
    return _ls(rx.samples, s)


def _block_rcond(a):
    sv = np.linalg.svd(a, compute_uv=False)
    return 0.0 if sv[0] == 0.0 else sv[-1] / sv[0]


def fris_estimate_h2(cs, h0_hat, h1_hat, plan, seed, ledger=None):
    """Recover H2 in blocks of M rows, switching on M elements at a time.

    The last block is cropped to the remaining elements and inverted with a
    left pseudo-inverse.
    """
    m, k, n = cs.m, cs.k, cs.n
    s = plan.pilots(k)
    h0_hat = as_cmatrix(h0_hat)
    h1_hat = as_cmatrix(h1_hat)
    blocks = []
    for b in range(math.ceil(n / m)):
        lo, hi = b * m, min((b + 1) * m, n)
        h1_sq = h1_hat[:, lo:hi]
        rc = _block_rcond(h1_sq)
        if rc < BLOCK_RCOND:
            raise IllConditionedBlock(b + 1, rc)
        theta = np.zeros((n, n), dtype=np.complex128)
        theta[np.arange(lo, hi), np.arange(lo, hi)] = 1.0
        h = effective_channel(cs, theta)
        rx = simulate_uplink(h, s, plan.n0, _seed(seed, _STEP_H2, b), plan.es)
        _log(ledger, f"h2[{b + 1}]", s.shape[1])
        reflected = _ls(rx.samples - h0_hat @ s, s)
        if hi - lo == m:
            blocks.append(np.linalg.solve(h1_sq, reflected))
        else:
            blocks.append(left_pinv(h1_sq) @ reflected)
    return np.vstack(blocks)


def pilot_count(kind, m, k, n):
    """Pilot slots needed to configure the surface.

    For RIS only the lower bound ``MK + N(M + K)`` is known; it is returned as
    a :class:`LowerBound`.
    """
    kind = SurfaceKind.parse(kind)
    if kind is SurfaceKind.ARIS:
        return (n + 1) * k
    if kind is SurfaceKind.FRIS:
        return (1 + math.ceil(n / m)) * k + n
    return LowerBound(m * k + n * (m + k))


def _residual(cs, config, target):
    want = target.matrix()
    got = effective_channel(cs, config)
    return float(np.linalg.norm(got - want) / np.linalg.norm(want))


def end_to_end_configure(cs, kind, target, plan, seed):
    """Run a full estimation protocol, compute the configuration and apply it.

    The residual is measured against the true channels.
    """
    kind = SurfaceKind.parse(kind)
    if kind is SurfaceKind.ARIS:
        if cs.n < min_elements(kind, cs.m, cs.k):
            raise InfeasibleN(f"ARIS needs N >= {cs.m * cs.k}, got N = {cs.n}")
    elif kind is SurfaceKind.FRIS:
        if cs.n < cs.m:
            raise InfeasibleN(f"FRIS needs N >= M = {cs.m}, got N = {cs.n}")
    else:
        min_elements(kind, cs.m, cs.k)

    ledger = []
    h0_hat = estimate_h0(cs, plan, seed, ledger)
    if kind is SurfaceKind.ARIS:
        cascade_hat = aris_estimate_cascade(cs, h0_hat, plan, seed, ledger)
        config = RsConfig.aris(aris_coefficients(cascade_hat, h0_hat, target))
        extra = {"cascade_hat": cascade_hat}
    else:
        h1_hat = fris_estimate_h1(cs, plan, seed, ledger)
        h2_hat = fris_estimate_h2(cs, h0_hat, h1_hat, plan, seed, ledger)
        config = RsConfig.fris(fris_matrix(h0_hat, h1_hat, h2_hat, target))
        extra = {"h1_hat": h1_hat, "h2_hat": h2_hat}
    return EstimationReport(
        kind, h0_hat, config, sum(n for _, n in ledger),
        _residual(cs, config, target), ledger=ledger, **extra,
    )
