"""Dense complex linear algebra helpers used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  A semi-unitary
matrix is an ``(m, k)`` array with orthonormal columns; no wrapper type is
used, :func:`is_semi_unitary` checks the invariant.
"""
import numpy as np

from .errors import DimensionMismatch, NotSkewHermitian, SingularGram, ZeroMatrix

#: Reciprocal-condition floor for Gram-matrix solves.
GRAM_RCOND = 1e-12

# Independent RNG streams.  A seed plus one of these offsets fully determines
# the draws of one component, so components can be replayed separately.
STREAM_CHANNEL = 0
STREAM_NOISE = 1
STREAM_INIT = 2
STREAM_RIS = 3


def _flatten_seed(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    out = []
    for part in seed:
        sub = _flatten_seed(part)
        out.extend(sub if isinstance(sub, list) else [sub])
    return out


def make_rng(seed, stream=0):
    """PCG64 generator for ``seed`` on ``stream``.

    ``seed`` is an int or an (arbitrarily nested) tuple of ints.
    """
    entropy = _flatten_seed(seed)
    ss = np.random.SeedSequence(entropy, spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def as_cmatrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    return a


def complex_gaussian(rng, shape):
    """IID CN(0, 1) samples: real and imaginary parts each of variance 1/2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _gram_inverse(gram):
    s = np.linalg.svd(gram, compute_uv=False)
    if s[0] == 0.0 or s[-1] / s[0] < GRAM_RCOND:
        rc = 0.0 if s[0] == 0.0 else s[-1] / s[0]
        raise SingularGram(f"Gram matrix reciprocal condition {rc:.3e} < {GRAM_RCOND:g}")
    return np.linalg.inv(gram)


def _svd_pinv(a):
    return np.linalg.pinv(a, rcond=GRAM_RCOND)


def right_pinv(a, fallback=False):
    """Right pseudo-inverse ``A^H (A A^H)^{-1}`` of a full-row-rank matrix.

    If the Gram matrix is numerically singular :class:`SingularGram` is
    raised, unless ``fallback`` is set, in which case the SVD pseudo-inverse
    with cutoff ``1e-12 * sigma_max`` is returned instead.
    """
    a = as_cmatrix(a)
    if a.shape[0] > a.shape[1]:
        raise DimensionMismatch(f"right pseudo-inverse needs rows <= cols, got {a.shape}")
    try:
        return a.conj().T @ _gram_inverse(a @ a.conj().T)
    except SingularGram:
        if fallback:
            return _svd_pinv(a)
        raise


def left_pinv(a, fallback=False):
    """Left pseudo-inverse ``(A^H A)^{-1} A^H`` of a full-column-rank matrix."""
    a = as_cmatrix(a)
    if a.shape[0] < a.shape[1]:
        raise DimensionMismatch(f"left pseudo-inverse needs rows >= cols, got {a.shape}")
    try:
        return _gram_inverse(a.conj().T @ a) @ a.conj().T
    except SingularGram:
        if fallback:
            return _svd_pinv(a)
        raise


def vec(a):
    """Column-major vectorization, returned as an ``(rows*cols, 1)`` column."""
    a = as_cmatrix(a)
    return a.reshape(-1, 1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v, dtype=np.complex128)
    if v.size != rows * cols:
        raise DimensionMismatch(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def condition_number(a):
    """sigma_max / sigma_min; ``inf`` for a rank-deficient nonzero matrix."""
    s = np.linalg.svd(as_cmatrix(a), compute_uv=False)
    if s[0] == 0.0:
        raise ZeroMatrix("condition number of the zero matrix is undefined")
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def orthonormalize(a):
    """QR orthonormalization with the diagonal of R forced positive-real."""
    q, r = np.linalg.qr(as_cmatrix(a))
    d = np.diag(r).copy()
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    return q * phase[None, :]


def random_semi_unitary(m, k, seed):
    """Haar-distributed ``m x k`` matrix with orthonormal columns."""
    if k > m:
        raise DimensionMismatch(f"need k <= m, got m={m}, k={k}")
    rng = make_rng(seed, STREAM_INIT)
    return orthonormalize(complex_gaussian(rng, (m, k)))


def complete_unitary(u):
    """Extend an ``m x k`` semi-unitary matrix to an ``m x m`` unitary one.

    The first ``k`` columns of the result are exactly ``u``.
    """
    u = as_cmatrix(u)
    m, k = u.shape
    if k == m:
        return u.copy()
    q, _ = np.linalg.qr(u, mode="complete")
    full = q.copy()
    full[:, :k] = u
    return full


def unitarity_error(u):
    """Frobenius norm of ``U^H U - I``."""
    u = as_cmatrix(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])))


def is_semi_unitary(u, tol=1e-10):
    u = as_cmatrix(u)
    return u.shape[1] <= u.shape[0] and unitarity_error(u) <= tol


def hermitian_exp_factors(g, tol=1e-10):
    """Eigen-factors of a skew-Hermitian ``G``: ``-iG = V diag(lam) V^H``.

    With these, ``exp(t G) = V diag(exp(i t lam)) V^H`` for any real ``t``.
    """
    g = as_cmatrix(g)
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {g.shape}")
    if np.linalg.norm(g + g.conj().T) > tol * max(1.0, np.linalg.norm(g)):
        raise NotSkewHermitian("G^H != -G")
    h = -1j * g
    lam, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return lam, v


def exp_from_factors(lam, v, t=1.0):
    return (v * np.exp(1j * t * lam)[None, :]) @ v.conj().T


def expm_skew_hermitian(g, tol=1e-10):
    """Matrix exponential of a skew-Hermitian matrix (a unitary matrix)."""
    lam, v = hermitian_exp_factors(g, tol)
    return exp_from_factors(lam, v)
