"""Numerical kernels shared by the channel, capacity and allocation code.

Random variates come from :class:`numpy.random.Generator` (PCG64) seeded
through :class:`numpy.random.SeedSequence`, so independent streams for
sweep points are obtained by spawn keys rather than by offsetting seeds.
Matrices are plain ``complex128`` arrays; every linear-algebra helper
accepts a single matrix or a stack with leading batch dimensions.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import special

__all__ = [
    "DomainError",
    "SingularMatrixError",
    "GRAM_COND_LIMIT",
    "make_rng",
    "sample_rice",
    "sample_gamma_gamma",
    "erf",
    "gauss_hermite_nodes",
    "svd_singular_values",
    "hermitian_gram_inverse_diag",
    "gram_inverse_diag_batch",
    "log2_det_hermitian_psd",
]

# Condition number of A^H A above which the Gram matrix counts as singular.
GRAM_COND_LIMIT = 1e12
MAX_HERMITE_ORDER = 256


class DomainError(ValueError):
    """An argument lies outside the domain of a numerical routine."""


class SingularMatrixError(DomainError):
    """A Gram matrix is rank deficient or too badly conditioned to invert."""


def make_rng(seed, *stream):
    """Return a PCG64 generator for ``seed`` and an optional stream key.

    Generators built with different ``stream`` tuples are statistically
    independent (SeedSequence spawn keys), and identical arguments always
    reproduce the same variate stream.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    key = tuple(int(k) for k in stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def sample_rice(rng, omega, psi, size=None):
    """Draw Ricean magnitudes.

    Parameters
    ----------
    rng : numpy.random.Generator
    omega : float
        Ratio of direct-path power to scattered power (K-factor).
        ``np.inf`` gives a pure line-of-sight (constant) magnitude.
    psi : float
        Total power of both paths, i.e. the mean-square magnitude.
    size : int or tuple, optional
        Output shape; a float is returned when omitted.

    Notes
    -----
    The line-of-sight amplitude squared is ``omega*psi/(1+omega)`` and the
    scattered component has variance ``psi/(2*(1+omega))`` per real
    dimension, so ``omega == 0`` is exactly Rayleigh with mean-square psi.
    """
    if not psi > 0:
        raise DomainError(f"Rice total power psi must be positive, got {psi}")
    if not omega >= 0:
        raise DomainError(f"Rice K-factor omega must be non-negative, got {omega}")
    if np.isinf(omega):
        los, scatter = np.sqrt(psi), 0.0
    else:
        los = np.sqrt(omega * psi / (1.0 + omega))
        scatter = np.sqrt(psi / (2.0 * (1.0 + omega)))
    re = los + scatter * rng.standard_normal(size)
    im = scatter * rng.standard_normal(size)
    out = np.hypot(re, im)
    return float(out) if size is None else out


def sample_gamma_gamma(rng, alpha, beta, size=None):
    """Draw unit-mean Gamma-Gamma variates as a product of two unit-mean Gammas.

    The variance is ``1/alpha + 1/beta + 1/(alpha*beta)``.
    """
    if not (alpha > 0 and beta > 0):
        raise DomainError(f"Gamma-Gamma shapes must be positive, got ({alpha}, {beta})")
    out = rng.gamma(alpha, 1.0 / alpha, size) * rng.gamma(beta, 1.0 / beta, size)
    return float(out) if size is None else out


def erf(x):
    """Gauss error function (vectorised)."""
    return special.erf(x)


@lru_cache(maxsize=None)
def _hermite_rule(order):
    nodes, weights = hermgauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_hermite_nodes(order):
    """Nodes and weights for ``∫ exp(-t**2) f(t) dt ≈ Σ w_i f(t_i)``.

    The rule is exact for polynomials up to degree ``2*order - 1``.
    Returned arrays are cached and read-only.
    """
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
        raise DomainError(f"Gauss-Hermite order must be an integer, got {order!r}")
    if not 1 <= order <= MAX_HERMITE_ORDER:
        raise DomainError(f"Gauss-Hermite order must lie in [1, {MAX_HERMITE_ORDER}], got {order}")
    return _hermite_rule(int(order))


def _as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2:
        raise DomainError(f"expected a matrix (or a stack of matrices), got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    return a


def svd_singular_values(a):
    """Singular values of ``a`` in non-increasing order (batched over leading axes)."""
    return np.linalg.svd(_as_matrix(a), compute_uv=False)


def gram_inverse_diag_batch(a, cond_limit=GRAM_COND_LIMIT):
    """Diagonal of ``(A^H A)^{-1}`` for a stack of tall matrices.

    Returns
    -------
    diag : ndarray, shape (..., cols)
        Real diagonal entries; rows flagged singular are filled with ``inf``.
    singular : ndarray of bool, shape (...)
        True where the Gram matrix condition number exceeds ``cond_limit``
        (rank-deficient access channel).
    """
    a = _as_matrix(a)
    rows, cols = a.shape[-2:]
    if rows < cols:
        raise DomainError(f"need rows >= cols for a full-rank Gram matrix, got {rows}x{cols}")
    sv = np.linalg.svd(a, compute_uv=False)
    smax, smin = sv[..., 0], sv[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        singular = ~(smin > 0) | ((smax / smin) ** 2 > cond_limit)
    gram = np.conj(np.swapaxes(a, -1, -2)) @ a
    # Singular slices are replaced by the identity so the batched inverse stays well defined.
    safe = np.where(singular[..., None, None], np.eye(cols), gram)
    diag = np.real(np.diagonal(np.linalg.inv(safe), axis1=-2, axis2=-1)).copy()
    diag[singular] = np.inf
    return diag, singular


def hermitian_gram_inverse_diag(a, cond_limit=GRAM_COND_LIMIT):
    """Real diagonal entries of ``(A^H A)^{-1}`` for one full-column-rank matrix.

    Raises
    ------
    SingularMatrixError
        If the Gram matrix condition number exceeds ``cond_limit``.
    """
    a = _as_matrix(a)
    if a.ndim != 2:
        raise DomainError("hermitian_gram_inverse_diag takes a single matrix")
    diag, singular = gram_inverse_diag_batch(a, cond_limit)
    if singular:
        raise SingularMatrixError("Gram matrix is singular or ill-conditioned")
    return diag


def log2_det_hermitian_psd(a, tol=1e-9):
    """``log2 det(A)`` for Hermitian positive semidefinite ``A`` (batched).

    Uses the eigenvalues of the Hermitian part; an eigenvalue below
    ``-tol`` is treated as a non-PSD input.
    """
    a = _as_matrix(a)
    herm = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    eig = np.linalg.eigvalsh(herm)
    if np.any(eig < -tol):
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {eig.min():.3g})")
    with np.errstate(divide="ignore"):
        return np.sum(np.log2(np.clip(eig, 0.0, None)), axis=-1)
