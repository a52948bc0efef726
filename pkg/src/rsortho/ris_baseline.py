"""Phase-only RIS baseline: minimize the condition number of the channel.

A RIS cannot orthogonalize the channel exactly in general, so the phases are
chosen by multi-start finite-difference descent on the phase torus, with the
step halved whenever a move fails to lower the condition number.
"""
from dataclasses import dataclass, field

import numpy as np

from .linalg_core import STREAM_RIS, condition_number, make_rng

TWO_PI = 2.0 * np.pi


@dataclass
class RisOptConfig:
    restarts: int = 8
    max_iters: int = 200
    fd_step: float = 1e-6
    initial_step: float = 0.5
    decay: float = 0.5
    min_step: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if min(self.restarts, self.max_iters) < 1:
            raise ValueError("restarts and max_iters must be positive")
        if min(self.fd_step, self.initial_step, self.min_step) <= 0 or not 0 < self.decay < 1:
            raise ValueError("step settings must be positive and decay in (0, 1)")


@dataclass
class RisResult:
    phases: np.ndarray
    kappa: float
    trace: list = field(default_factory=list)
    initial_kappas: list = field(default_factory=list)

    def __iter__(self):
        # unpacks as (phases, kappa)
        return iter((self.phases, self.kappa))


def ris_channels(cs, phases):
    """Effective channels for a stack of phase vectors, shape (B, M, K)."""
    phases = np.atleast_2d(np.asarray(phases, dtype=float))
    return cs.h0[None] + (cs.h1[None] * np.exp(1j * phases)[:, None, :]) @ cs.h2


def _kappas(cs, phases):
    s = np.linalg.svd(ris_channels(cs, phases), compute_uv=False)
    with np.errstate(divide="ignore"):
        return s[:, 0] / s[:, -1]


def kappa_objective(cs, phases):
    """Condition number of ``H0 + H1 diag(exp(j phases)) H2``."""
    phases = np.asarray(phases, dtype=float).ravel()
    if phases.size != cs.n:
        raise ValueError(f"expected {cs.n} phases, got {phases.size}")
    return condition_number(ris_channels(cs, phases)[0])


def per_ue_gains(cs, phases):
    """Eigenvalues of ``H^H H`` (ascending): the per-UE channel gains."""
    h = ris_channels(cs, phases)[0]
    return np.linalg.eigvalsh(h.conj().T @ h)


def _fd_grads(cs, phases, step):
    b, n = phases.shape
    eye = step * np.eye(n)
    plus = (phases[:, None, :] + eye[None]).reshape(-1, n)
    minus = (phases[:, None, :] - eye[None]).reshape(-1, n)
    kp = _kappas(cs, plus).reshape(b, n)
    km = _kappas(cs, minus).reshape(b, n)
    return (kp - km) / (2 * step)


def minimize_condition_number(cs, cfg=None):
    """Best phases over ``cfg.restarts`` uniformly random starts.

    Each restart moves along the normalized negative finite-difference
    gradient; a move that does not lower the condition number is rejected
    and the step multiplied by ``cfg.decay``.
    """
    cfg = cfg or RisOptConfig()
    if cs.n == 0:
        k0 = condition_number(cs.h0)
        return RisResult(np.zeros(0), k0, [k0], [k0])

    rng = make_rng(cfg.seed, STREAM_RIS)
    phi = rng.uniform(0.0, TWO_PI, size=(cfg.restarts, cs.n))
    kap = _kappas(cs, phi)
    initial = [float(x) for x in kap]
    traces = [[float(x)] for x in kap]
    step = np.full(cfg.restarts, cfg.initial_step)

    for _ in range(cfg.max_iters):
        act = np.flatnonzero((step >= cfg.min_step) & np.isfinite(kap))
        if act.size == 0:
            break
        grad = _fd_grads(cs, phi[act], cfg.fd_step)
        norm = np.linalg.norm(grad, axis=1)
        flat = norm == 0
        step[act[flat]] = 0.0
        act, grad, norm = act[~flat], grad[~flat], norm[~flat]
        if act.size == 0:
            break
        trial = np.mod(phi[act] - step[act, None] * grad / norm[:, None], TWO_PI)
        k_trial = _kappas(cs, trial)
        better = k_trial < kap[act]
        phi[act[better]] = trial[better]
        kap[act[better]] = k_trial[better]
        step[act[~better]] *= cfg.decay
        for i in act[better]:
            traces[i].append(float(kap[i]))

    best = int(np.argmin(kap))
    return RisResult(phi[best].copy(), float(kap[best]), traces[best], initial)
