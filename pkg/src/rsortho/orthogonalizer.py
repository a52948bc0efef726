"""Closed-form ARIS / FRIS configurations that make the channel orthogonal.

For a target ``sqrt(beta) * U`` (``U`` semi-unitary) the ARIS coefficients
solve ``H12 alpha = vec(sqrt(beta) U - H0)`` with the minimum-norm right
pseudo-inverse of the cascade matrix ``H12``; the FRIS matrix is
``pinv_r(H1) (sqrt(beta) U - H0) pinv_l(H2)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InfeasibleN, NotApplicable, SingularGram
from .linalg_core import as_cmatrix, is_semi_unitary, left_pinv, right_pinv, vec
from .surface import RsConfig, SurfaceKind

RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class TargetChannel:
    """Desired orthogonal channel ``sqrt(beta) * u_tilde``."""

    beta: float
    u_tilde: np.ndarray

    def __post_init__(self):
        u = as_cmatrix(self.u_tilde)
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if not is_semi_unitary(u):
            raise ValueError("u_tilde must have orthonormal columns")
        object.__setattr__(self, "u_tilde", u)
        object.__setattr__(self, "beta", float(self.beta))

    def matrix(self):
        return np.sqrt(self.beta) * self.u_tilde


def _target_matrix(target):
    # A TargetChannel or any M x K matrix (non-orthogonal targets are allowed).
    if isinstance(target, TargetChannel):
        return target.matrix()
    return as_cmatrix(target)


def _check_rank(a, what):
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] < RANK_CUTOFF * s[0]:
        raise SingularGram(f"{what} is rank-deficient")


def build_cascade_matrix(h1, h2):
    """MK x N matrix whose column n is ``vec(h1[:, n] h2[n, :])``."""
    h1 = as_cmatrix(h1)
    h2 = as_cmatrix(h2)
    if h1.shape[1] != h2.shape[0]:
        raise DimensionMismatch(f"H1 {h1.shape} and H2 {h2.shape} disagree on N")
    m, n = h1.shape
    k = h2.shape[1]
    # vec(a b^T) = b kron a in column-major order
    return (h2.T[:, None, :] * h1[None, :, :]).reshape(m * k, n)


def min_elements(kind, m, k):
    kind = SurfaceKind.parse(kind)
    if kind is SurfaceKind.ARIS:
        return m * k
    if kind is SurfaceKind.FRIS:
        return min(m, k)
    raise NotApplicable("a phase-only RIS cannot orthogonalize the channel in general")


def aris_coefficients(cascade, h0, target):
    """Minimum-norm alpha with ``cascade @ alpha = vec(target - h0)``."""
    cascade = as_cmatrix(cascade)
    h0 = as_cmatrix(h0)
    mk, n = cascade.shape
    if mk != h0.size:
        raise DimensionMismatch(f"cascade has {mk} rows, H0 has {h0.size} entries")
    if n < mk:
        raise InfeasibleN(f"ARIS needs N >= MK = {mk}, got N = {n}")
    _check_rank(cascade, "cascade matrix")
    rhs = vec(_target_matrix(target) - h0)
    return (right_pinv(cascade) @ rhs).ravel()


def solve_aris(cs, target):
    alpha = aris_coefficients(build_cascade_matrix(cs.h1, cs.h2), cs.h0, target)
    return RsConfig.aris(alpha)


def fris_matrix(h0, h1, h2, target):
    h0, h1, h2 = (as_cmatrix(x) for x in (h0, h1, h2))
    m = h1.shape[0]
    n = h1.shape[1]
    if n < m:
        raise InfeasibleN(f"FRIS needs N >= M = {m}, got N = {n}")
    _check_rank(h1, "H1")
    _check_rank(h2, "H2")
    return right_pinv(h1) @ (_target_matrix(target) - h0) @ left_pinv(h2)


def solve_fris(cs, target):
    return RsConfig.fris(fris_matrix(cs.h0, cs.h1, cs.h2, target))


def rs_sum_power(theta):
    """Squared Frobenius norm of the reflection matrix (exactly N for RIS)."""
    return theta.sum_power()
