"""Minimum-power orthogonalization over the semi-unitary target manifold.

For both surface kinds the sum power of the closed-form configuration is a
quadratic in ``sqrt(beta)``::

    P(beta, U) = beta * g(U) - 2 * sqrt(beta) * f(U) + c

ARIS uses ``A = (H12 H12^H)^{-1}`` with ``f = Re vec(U)^H A vec(H0)``,
``g = vec(U)^H A vec(U)``, ``c = vec(H0)^H A vec(H0)``.  FRIS uses
``A1 = (H1 H1^H)^{-1}``, ``A2 = (H2^H H2)^{-1}`` and the trace forms
``f = Re tr(A2 U^H A1 H0)`` etc.

``beta`` is eliminated with ``beta_o = (f / g)^2``, which leaves the reduced
objective ``c + b f^2 / g`` with ``b = 1 - 2 sign(f)``.  That objective is
minimized along geodesics of the unitary group, ``U <- exp(-mu G) U``, with
an Armijo step rule.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleN, SingularGram
from .linalg_core import (
    _gram_inverse,
    as_cmatrix,
    complete_unitary,
    orthonormalize,
    random_semi_unitary,
    unvec,
    vec,
)
from .orthogonalizer import build_cascade_matrix
from .surface import SurfaceKind

DRIFT_TOL = 1e-10
MAX_DOUBLINGS = 60


def _check_hpd(a, what):
    ev = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    if ev[0] <= 0:
        raise SingularGram(f"{what} is not positive definite")


class PowerObjective:
    """Cached operators for the ARIS or FRIS power expression of one channel.

    Both kinds are stored as one Hermitian positive definite ``MK x MK``
    matrix ``q`` acting on ``vec(U)``; for FRIS ``q = kron(A2^T, A1)`` since
    ``vec(A1 U A2) = (A2^T kron A1) vec(U)``.  Methods accept a single
    ``(M, K)`` matrix or a stack ``(R, M, K)``.
    """

    def __init__(self, kind, h0, *, g12_inv=None, g1_inv=None, g2_inv=None):
        self.kind = SurfaceKind.parse(kind)
        self.h0 = as_cmatrix(h0)
        self.m, self.k = self.h0.shape
        if self.kind is SurfaceKind.ARIS:
            self.g12_inv = as_cmatrix(g12_inv)
            _check_hpd(self.g12_inv, "G12^-1")
            self.q = self.g12_inv
        elif self.kind is SurfaceKind.FRIS:
            self.g1_inv = as_cmatrix(g1_inv)
            self.g2_inv = as_cmatrix(g2_inv)
            _check_hpd(self.g1_inv, "G1^-1")
            _check_hpd(self.g2_inv, "G2^-1")
            self.q = np.kron(self.g2_inv.T, self.g1_inv)
        else:
            raise ValueError("power objective is defined for ARIS and FRIS only")
        self._h0_vec = vec(self.h0).ravel()
        self._q_h0 = self.q @ self._h0_vec
        self.c = float(np.real(np.vdot(self._h0_vec, self._q_h0)))

    @classmethod
    def from_channels(cls, cs, kind):
        kind = SurfaceKind.parse(kind)
        if kind is SurfaceKind.ARIS:
            if cs.n < cs.m * cs.k:
                raise InfeasibleN(f"ARIS needs N >= MK = {cs.m * cs.k}, got N = {cs.n}")
            h12 = build_cascade_matrix(cs.h1, cs.h2)
            return cls(kind, cs.h0, g12_inv=_gram_inverse(h12 @ h12.conj().T))
        if kind is SurfaceKind.FRIS:
            if cs.n < cs.m:
                raise InfeasibleN(f"FRIS needs N >= M = {cs.m}, got N = {cs.n}")
            return cls(
                kind,
                cs.h0,
                g1_inv=_gram_inverse(cs.h1 @ cs.h1.conj().T),
                g2_inv=_gram_inverse(cs.h2.conj().T @ cs.h2),
            )
        raise ValueError("power objective is defined for ARIS and FRIS only")

    def _vecs(self, u):
        # (R, M, K) -> (R, MK) column-major vectorizations
        return np.swapaxes(u, -1, -2).reshape(u.shape[0], -1)

    def _unvecs(self, v):
        return np.swapaxes(v.reshape(v.shape[0], self.k, self.m), -1, -2)

    def _batch_terms(self, u):
        v = self._vecs(u)
        qv = v @ self.q.T
        f = np.real(v.conj() @ self._q_h0)
        g = np.real(np.einsum("ij,ij->i", v.conj(), qv))
        return f, g, qv

    def terms(self, u):
        """Return ``(f, g, c)``; ``f`` and ``g`` are arrays for a stack."""
        u = np.asarray(u, dtype=np.complex128)
        if u.ndim == 2:
            f, g, _ = self._batch_terms(u[None])
            return float(f[0]), float(g[0]), self.c
        f, g, _ = self._batch_terms(u)
        return f, g, self.c

    def power(self, beta, u):
        f, g, c = self.terms(u)
        return beta * g - 2.0 * np.sqrt(beta) * f + c

    def beta_opt(self, u):
        f, g, _ = self.terms(u)
        return (f / g) ** 2

    def reduced(self, u):
        """``P(beta_opt(u), u) = c + b f^2 / g``."""
        f, g, c = self.terms(u)
        b = 1.0 - 2.0 * np.sign(f)
        return c + b * f * f / g

    def grad(self, u):
        """Wirtinger gradient of :meth:`reduced` with respect to ``conj(u)``.

        ``(b / g^2) unvec(f g q vec(H0) - f^2 q vec(U))``.
        """
        u = np.asarray(u, dtype=np.complex128)
        single = u.ndim == 2
        if single:
            u = u[None]
        f, g, qv = self._batch_terms(u)
        b = 1.0 - 2.0 * np.sign(f)
        gv = (b / g**2)[:, None] * ((f * g)[:, None] * self._q_h0[None, :] - (f * f)[:, None] * qv)
        out = self._unvecs(gv)
        return out[0] if single else out


def _require(obj, kind):
    if obj.kind is not kind:
        raise ValueError(f"expected a {kind.value} objective, got {obj.kind.value}")


def pa_power(obj, beta, u):
    _require(obj, SurfaceKind.ARIS)
    return obj.power(beta, u)


def pf_power(obj, beta, u):
    _require(obj, SurfaceKind.FRIS)
    return obj.power(beta, u)


def beta_opt(obj, u):
    return obj.beta_opt(u)


def euclidean_grad_pa(obj, u):
    _require(obj, SurfaceKind.ARIS)
    return obj.grad(u)


def euclidean_grad_pf(obj, u):
    _require(obj, SurfaceKind.FRIS)
    return obj.grad(u)


def pad_columns(grad, m):
    """Zero-pad an ``m x k`` gradient to ``m x m`` (extra columns have no effect)."""
    out = np.zeros((m, m), dtype=np.complex128)
    out[:, : grad.shape[1]] = grad
    return out


def finite_diff_grad(obj, u, step=1e-6, fn=None):
    """Central-difference Wirtinger gradient ``(d/dRe + i d/dIm) / 2``.

    ``fn`` defaults to ``obj.reduced``; any real function of ``u`` works.
    """
    fn = obj.reduced if fn is None else fn
    u = as_cmatrix(u)
    out = np.zeros_like(u)
    for idx in np.ndindex(u.shape):
        d = np.zeros_like(u)
        d[idx] = step
        d_re = (fn(u + d) - fn(u - d)) / (2 * step)
        d_im = (fn(u + 1j * d) - fn(u - 1j * d)) / (2 * step)
        out[idx] = 0.5 * (d_re + 1j * d_im)
    return out


def unit_power_beta(obj, u, budget):
    """Largest beta with ``P(beta, u) = budget``; NaN when unreachable."""
    f, g, c = obj.terms(u)
    disc = f * f - g * (c - budget)
    # c - budget cancels when the budget sits at the vertex; allow for its rounding
    if disc < -1e-12 * max(f * f, g * max(abs(c), abs(budget))):
        return float("nan")
    disc = max(disc, 0.0)
    root = (f + np.sqrt(disc)) / g
    return float(root * root) if root >= 0 else float("nan")


@dataclass
class OptimizerConfig:
    max_iters: int = 500
    grad_tol: float = 1e-6
    initial_step: float = 1e-2
    restarts: int = 8
    seed: int = 0
    min_step: float = 1e-12

    def __post_init__(self):
        if min(self.max_iters, self.restarts) < 1 or min(self.grad_tol, self.initial_step, self.min_step) <= 0:
            raise ValueError("optimizer settings must be positive")


@dataclass
class OptimResult:
    u_star: np.ndarray
    beta_star: float
    p_min: float
    trace: list
    converged: bool
    initial_objectives: list = field(default_factory=list)

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "objective", "grad_norm", "step"])
            for it, obj, gn, mu in self.trace:
                w.writerow([it, repr(float(obj)), repr(float(gn)), repr(float(mu))])


def _moved(lam, v, w, steps):
    # exp(-step G) W for each stacked row, with -iG = V diag(lam) V^H
    ph = np.exp(-1j * steps[:, None] * lam)
    return ((v * ph[:, None, :]) @ np.swapaxes(v.conj(), -1, -2)) @ w


def _descend(obj, u0s, cfg, grad_fn):
    """Geodesic descent run independently on every start in the stack ``u0s``."""
    r, m, k = u0s.shape
    w = np.stack([complete_unitary(u) for u in u0s])
    eye = np.eye(m)

    def cost(x):
        return np.atleast_1d(obj.reduced(x[:, :, :k]))

    mu = np.full(r, float(cfg.initial_step))
    cur = cost(w)
    traces = [[] for _ in range(r)]
    done = np.zeros(r, dtype=bool)
    converged = np.zeros(r, dtype=bool)

    def stop(rows, it, gn, conv):
        for i, g in zip(rows, gn):
            traces[i].append((it, float(cur[i]), float(g), 0.0))
        done[rows] = True
        converged[rows] = conv

    for it in range(cfg.max_iters):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        gamma = np.zeros((act.size, m, m), dtype=np.complex128)
        gamma[:, :, :k] = grad_fn(w[act, :, :k])
        a = gamma @ np.swapaxes(w[act].conj(), -1, -2)
        gdir = a - np.swapaxes(a.conj(), -1, -2)
        gn2 = np.sum(np.abs(gdir) ** 2, axis=(1, 2))
        gn = np.sqrt(gn2)
        small = gn < cfg.grad_tol
        stop(act[small], it, gn[small], True)
        keep = ~small
        act, gdir, gn2, gn = act[keep], gdir[keep], gn2[keep], gn[keep]
        if act.size == 0:
            continue

        lam, v = np.linalg.eigh(-1j * gdir)
        w_act, cur_act, mu_act = w[act], cur[act], mu[act]

        grow = np.ones(act.size, dtype=bool)
        for _ in range(MAX_DOUBLINGS):
            sel = np.flatnonzero(grow)
            if sel.size == 0:
                break
            j2 = cost(_moved(lam[sel], v[sel], w_act[sel], 2 * mu_act[sel]))
            ok = cur_act[sel] - j2 >= mu_act[sel] * gn2[sel]
            mu_act[sel[ok]] *= 2
            grow[sel[~ok]] = False

        w_new = _moved(lam, v, w_act, mu_act)
        j_new = cost(w_new)
        shrink = (cur_act - j_new < 0.5 * mu_act * gn2) & (mu_act >= cfg.min_step)
        while shrink.any():
            sel = np.flatnonzero(shrink)
            mu_act[sel] *= 0.5
            w_new[sel] = _moved(lam[sel], v[sel], w_act[sel], mu_act[sel])
            j_new[sel] = cost(w_new[sel])
            shrink[sel] = (cur_act[sel] - j_new[sel] < 0.5 * mu_act[sel] * gn2[sel]) & (
                mu_act[sel] >= cfg.min_step
            )
        mu[act] = mu_act

        drift = np.linalg.norm(np.swapaxes(w_new.conj(), -1, -2) @ w_new - eye, axis=(1, 2))
        for i in np.flatnonzero(drift > DRIFT_TOL):
            w_new[i] = orthonormalize(w_new[i])
            j_new[i] = cost(w_new[i][None])[0]

        # stagnation: step underflow, or drift repair undid the decrease
        failed = (mu_act < cfg.min_step) | (j_new > cur_act)
        stop(act[failed], it, gn[failed], False)
        ok = ~failed
        for i, g, step in zip(act[ok], gn[ok], mu_act[ok]):
            traces[i].append((it, float(cur[i]), float(g), float(step)))
        w[act[ok]] = w_new[ok]
        cur[act[ok]] = j_new[ok]

    for i in np.flatnonzero(~done):
        traces[i].append((cfg.max_iters, float(cur[i]), float("nan"), 0.0))

    results = []
    for i in range(r):
        u_star = w[i, :, :k].copy()
        results.append(
            OptimResult(u_star, obj.beta_opt(u_star), float(cur[i]), traces[i], bool(converged[i]))
        )
    return results


def riemannian_descent(obj, u0, cfg=None, grad_fn=None):
    """Steepest descent along unitary-group geodesics with Armijo steps.

    ``u0`` (M x K) is completed to a full unitary ``W``.  Each iteration forms
    the Riemannian direction ``G = Gamma W^H - W Gamma^H`` from the
    zero-padded Euclidean gradient ``Gamma`` and moves to ``exp(-mu G) W``.
    The step ``mu`` is doubled while
    ``J(W) - J(exp(-2 mu G) W) >= mu ||G||^2`` and halved while
    ``J(W) - J(exp(-mu G) W) < mu ||G||^2 / 2``; it carries over between
    iterations.  Trace rows are ``(iter, objective, grad_norm, step)``; the
    last row carries step 0.

    ``grad_fn`` overrides the Euclidean gradient (it receives a stack of
    ``(M, K)`` matrices).
    """
    cfg = cfg or OptimizerConfig()
    grad_fn = grad_fn or obj.grad
    u0 = as_cmatrix(u0)
    return _descend(obj, u0[None], cfg, grad_fn)[0]


def minimize_power(cs, kind, cfg=None, obj=None):
    """Multi-start minimization of the ARIS or FRIS sum power.

    Restart ``r`` starts from a Haar-random point drawn with seed
    ``(cfg.seed, r)``.  A start with ``f < 0`` is replaced by its negation,
    which is equally semi-unitary and lies on the branch where ``beta_opt``
    is the true minimizer over beta.  Restarts run as one batch; each is
    independent of the others.
    """
    cfg = cfg or OptimizerConfig()
    obj = obj or PowerObjective.from_channels(cs, kind)
    starts = []
    for r in range(cfg.restarts):
        u0 = random_semi_unitary(obj.m, obj.k, (cfg.seed, r))
        if obj.terms(u0)[0] < 0:
            u0 = -u0
        starts.append(u0)
    starts = np.stack(starts)
    results = _descend(obj, starts, cfg, obj.grad)
    best = min(range(len(results)), key=lambda i: results[i].p_min)
    out = results[best]
    out.initial_objectives = [float(x) for x in np.atleast_1d(obj.reduced(starts))]
    return out
