"""
Complex Hermitian kernels: sample covariances, Cholesky factors,
principal eigenvector and loaded positive-definite solves.

Covariances are plain complex ndarrays that have been passed through
:func:`hermitian`, so ``np.array_equal(R, R.conj().T)`` holds exactly.
"""

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, InvalidInput, InvalidWeight, NotPositiveDefinite

# relative to the mean diagonal
DEFAULT_LOADING = 1e-10
RANK_DEFICIENT_LOADING = 1e-8


def hermitian(mat):
    """Exact Hermitian symmetrization of a square matrix."""
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InvalidInput("matrix has non-finite entries")
    # conj() and + commute exactly in floating point, so the result is exactly Hermitian
    return 0.5 * (mat + mat.conj().T)


def _frames_and_weights(frames, weights):
    X = np.asarray(frames, dtype=np.complex128)
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidInput("frames must be a D x T matrix with T >= 1")
    T = X.shape[1]
    if weights is None:
        return X, None
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (T,):
        raise InvalidWeight(f"expected {T} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidWeight("weights must be finite and strictly positive")
    return X, w


def sample_cov(frames, weights=None):
    """
    (1/T) sum_t w_t x_t x_t^H

    Arguments:
        frames: complex D x T matrix (one column per frame)
        weights: optional strictly positive T-vector
    Returns:
        D x D Hermitian matrix
    """
    X, w = _frames_and_weights(frames, weights)
    Xw = X if w is None else X * w
    return hermitian(Xw @ X.conj().T / X.shape[1])


def weighted_data(frames, weights=None):
    """Square root B = X diag(sqrt(w / T)) of the weighted sample covariance, R = B B^H."""
    X, w = _frames_and_weights(frames, weights)
    T = X.shape[1]
    return X * (np.sqrt(w / T) if w is not None else np.sqrt(1.0 / T))


def _loaded(cov, loading, level=None):
    if loading < 0:
        raise InvalidInput("loading must be non-negative")
    cov = np.asarray(cov, dtype=np.complex128)
    D = cov.shape[0]
    if loading == 0:
        return cov
    if level is None:
        level = np.trace(cov).real / D
    return cov + loading * level * np.eye(D)


def cholesky(cov, loading=0.0):
    """
    Lower-triangular L with L^H L = cov + loading * (tr(cov)/D) * I.

    This factor plays the role of the matrix square root R^{1/2} with
    R^{H/2} R^{1/2} = R.  It is obtained from the ordinary Cholesky factor
    of the index-reversed matrix.
    """
    A = _loaded(cov, loading)
    J = slice(None, None, -1)
    try:
        C = np.linalg.cholesky(A[J, J])
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # A = P C C^H P  =>  L = P C^H P is lower triangular and L^H L = A
    return np.ascontiguousarray(C.conj().T[J, J])


def principal_eigvec(cov, tol=1e-10, max_iter=500):
    """
    Unit-norm dominant eigenvector by power iteration.

    The iterated operator is periodically replaced by its normalized square,
    so a step applies A^(2^k); this keeps small eigen-gaps tractable within
    max_iter.  Convergence is judged on the original matrix:
    ||A v - rho v|| <= tol * rho with rho the Rayleigh quotient.

    Returns:
        (v, rho), with v's largest-modulus entry made real-positive
    """
    A = np.asarray(cov, dtype=np.complex128)
    D = A.shape[0]
    scale = np.linalg.norm(A)
    if scale == 0 or not np.isfinite(scale):
        raise ConvergenceFailure("zero or non-finite matrix has no principal eigenvector")
    B = A / scale
    # e1 plus a fixed small perturbation, so no eigenvector is exactly orthogonal
    v = np.full(D, 1e-3, dtype=np.complex128) + 1e-3j * np.arange(D) / max(D, 1)
    v[0] = 1.0
    v /= np.linalg.norm(v)
    for it in range(1, max_iter + 1):
        u = B @ v
        nrm = np.linalg.norm(u)
        if nrm == 0:
            raise ConvergenceFailure("iterate collapsed to zero")
        v = u / nrm
        Av = A @ v
        rho = np.vdot(v, Av).real
        if rho > 0 and np.linalg.norm(Av - rho * v) <= tol * rho:
            return _fix_phase(v), rho
        if it % 8 == 0:
            B = B @ B
            B = 0.5 * (B + B.conj().T)
            B /= np.linalg.norm(B)
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations")


def _fix_phase(v):
    k = np.argmax(np.abs(v))
    v = v * (np.conj(v[k]) / abs(v[k]))
    v[k] = v[k].real
    return v


def solve_hpd(cov, rhs, loading=DEFAULT_LOADING, level=None):
    """
    Solve (cov + loading * level * I) x = rhs through a Cholesky factorization.
    level defaults to the mean diagonal tr(cov) / D.
    """
    A = _loaded(cov, loading, level)
    b = np.asarray(rhs, dtype=np.complex128)
    if b.shape[0] != A.shape[0]:
        raise InvalidInput(f"rhs length {b.shape[0]} does not match matrix size {A.shape[0]}")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise NotPositiveDefinite("solve produced non-finite values")
    return x


def default_loading(dim, n_frames):
    """Loading used for a covariance of this size built from n_frames frames."""
    return RANK_DEFICIENT_LOADING if n_frames < dim else DEFAULT_LOADING


def solve_gram(data, rhs, loading=DEFAULT_LOADING, level=None):
    """
    Solve (B B^H + loading * level * I) x = rhs from the square root B
    (D x T) via a QR factorization of B^H, without forming B B^H.

    The triangular factor has the condition number of B, the square root
    of that of the covariance, which matters when a few frames carry
    weights many orders of magnitude above the rest.  level defaults to
    the mean diagonal ||B||_F^2 / D.
    """
    B = np.asarray(data, dtype=np.complex128)
    D = B.shape[0]
    b = np.asarray(rhs, dtype=np.complex128)
    if b.shape[0] != D:
        raise InvalidInput(f"rhs length {b.shape[0]} does not match matrix size {D}")
    if loading < 0:
        raise InvalidInput("loading must be non-negative")
    A = B.conj().T
    if loading > 0:
        if level is None:
            level = np.sum(np.abs(B) ** 2) / D
        A = np.vstack([A, np.sqrt(loading * level) * np.eye(D)])
    if A.shape[0] < D:
        raise NotPositiveDefinite(f"{A.shape[0]} frames cannot span {D} dimensions")
    # Householder QR of a badly row-scaled matrix is row-wise backward stable
    # when the rows are taken in order of decreasing size
    order = np.argsort(-np.max(np.abs(A), axis=1), kind="stable")
    U = scipy.linalg.qr(A[order], mode="r", check_finite=False)[0][:D]
    # B B^H + loading = U^H U
    d = np.abs(np.diag(U))
    if not np.all(d > np.finfo(float).eps * d.max() * D):
        raise NotPositiveDefinite("weighted data matrix is numerically rank deficient")
    y = scipy.linalg.solve_triangular(U, b, trans="C", lower=False, check_finite=False)
    x = scipy.linalg.solve_triangular(U, y, lower=False, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise NotPositiveDefinite("solve produced non-finite values")
    return x