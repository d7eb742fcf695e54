"""Spectral kernels for small dense complex matrices.

Everything here runs on LAPACK through scipy.linalg and is a pure function of
its inputs. Norms are Frobenius norms throughout.
"""
import logging

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from app.errors import IndefiniteInput, InvalidMatrix, NonConvergence, NotHermitian
from app.models import EigenDecomposition, SpectrumClass, SpectrumKind
from app.utils.numeric import as_matrix, check_tol, fro, spectral_order

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_CLASSIFY_TOL = 1e-8


def _fix_phase(vectors):
    """Unit-normalise columns and rotate each so its first largest-modulus entry is real and >= 0."""
    vectors = np.array(vectors, dtype=np.complex128)
    for k in range(vectors.shape[1]):
        column = vectors[:, k]
        norm = np.linalg.norm(column)
        if norm == 0.0:
            continue
        column = column / norm
        pivot = column[int(np.argmax(np.abs(column)))]
        if pivot != 0:
            column = column * (np.conj(pivot) / abs(pivot))
        vectors[:, k] = column
    return vectors


def _coalesced(values, vectors, tol, scale):
    """True when some cluster of close eigenvalues shares (numerically) parallel eigenvectors.

    Near an order-k exceptional point eigenvalues split by O(tol^(1/k)), so
    clusters are linked generously; parallel columns decide.
    """
    if len(values) < 2:
        return False
    linked = np.abs(values[:, None] - values[None, :]) <= tol ** 0.25 * max(scale, 1.0)
    count, labels = connected_components(linked.astype(int), directed=False)
    for label in range(count):
        members = np.nonzero(labels == label)[0]
        if len(members) > 1 and scipy.linalg.svdvals(vectors[:, members])[-1] <= np.sqrt(tol):
            return True
    return False


def _condition(values, vectors, tol, scale):
    if _coalesced(values, vectors, tol, scale):
        return float('inf')
    condition = float(np.linalg.cond(vectors))
    if not np.isfinite(condition):
        return float('inf')
    return max(condition, 1.0)


def eig_general(a, tol=DEFAULT_TOL):
    """Eigendecomposition of a general (possibly non-normal) matrix.

    Defective input (an exceptional point) is not an error: the best-effort
    vectors come back with a huge `condition` and `defective` set.
    """
    a = as_matrix(a)
    tol = check_tol(tol)
    try:
        values, vectors = scipy.linalg.eig(a, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NonConvergence(f"eigenvalue iteration failed: {e}") from e

    order = spectral_order(values)
    values = values[order]
    vectors = _fix_phase(vectors[:, order])
    scale = fro(a)
    decomposition = EigenDecomposition(
        eigenvalues=values,
        right_vectors=vectors,
        condition=_condition(values, vectors, tol, scale),
        tol=tol,
    )

    residual = float(np.max(np.linalg.norm(a @ vectors - vectors * values, axis=0)))
    if residual > tol * scale:
        logger.warning(f"eig_general residual {residual:.3e} exceeds {tol:.1e}*||A||")
    if decomposition.defective:
        logger.debug(f"defective spectrum: eigenvector condition {decomposition.condition:.3e}")
    return decomposition


def eig_hermitian(a, tol=DEFAULT_TOL):
    a = as_matrix(a)
    tol = check_tol(tol)
    scale = fro(a)
    asymmetry = fro(a - a.conj().T)
    if asymmetry > tol * scale:
        raise NotHermitian(asymmetry / scale, tol)
    try:
        values, vectors = scipy.linalg.eigh((a + a.conj().T) / 2, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NonConvergence(f"Hermitian eigensolver failed: {e}") from e
    vectors = _fix_phase(vectors)
    return EigenDecomposition(
        eigenvalues=values.astype(np.complex128),
        right_vectors=vectors,
        condition=_condition(values.astype(np.complex128), vectors, tol, scale),
        tol=tol,
    )


def hermitian_sqrt(a, tol=DEFAULT_TOL):
    """Unique Hermitian positive semidefinite square root via eigh."""
    a = as_matrix(a)
    tol = check_tol(tol)
    scale = fro(a)
    asymmetry = fro(a - a.conj().T)
    if asymmetry > tol * scale:
        raise NotHermitian(asymmetry / scale, tol)
    values, vectors = scipy.linalg.eigh((a + a.conj().T) / 2, check_finite=False)
    bound = tol * scale
    if values[0] < -bound:
        raise IndefiniteInput(float(values[0]), bound)
    roots = np.sqrt(np.clip(values, 0.0, None))
    return (vectors * roots[None, :]) @ vectors.conj().T


def numeric_rank(a, tol=DEFAULT_TOL):
    a = np.asarray(a, dtype=np.complex128)
    tol = check_tol(tol)
    singular_values = scipy.linalg.svdvals(a)
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > tol * singular_values[0]))


def classify_spectrum(eigs, tol=DEFAULT_CLASSIFY_TOL):
    eigs = np.atleast_1d(np.asarray(eigs, dtype=np.complex128))
    if eigs.size == 0:
        raise InvalidMatrix("cannot classify an empty spectrum")
    tol = check_tol(tol)
    scale = float(np.max(np.abs(eigs)))
    min_real = float(np.min(eigs.real))
    max_imag_abs = float(np.max(np.abs(eigs.imag)))
    if max_imag_abs > tol * scale:
        kind = SpectrumKind.SOME_COMPLEX
    elif min_real > tol * scale:
        kind = SpectrumKind.ALL_REAL_POSITIVE
    else:
        kind = SpectrumKind.ALL_REAL_MIXED_SIGN
    return SpectrumClass(kind=kind, min_real=min_real, max_imag_abs=max_imag_abs)
