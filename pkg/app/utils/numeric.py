import numpy as np

from app.errors import InvalidMatrix


def as_matrix(a, name='matrix'):
    """Return `a` as a finite square complex128 array or raise InvalidMatrix."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidMatrix(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return m


def check_tol(tol, name='tol'):
    if not np.isfinite(tol) or tol <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {tol!r}")
    return float(tol)


def fro(a):
    return float(np.linalg.norm(a, 'fro'))


def relative_asymmetry(a):
    """||A - A^dagger|| / ||A||, zero for the zero matrix."""
    norm = fro(a)
    if norm == 0.0:
        return 0.0
    return fro(a - a.conj().T) / norm


def spectral_order(values):
    """Permutation sorting complex values by real part, then imaginary part."""
    values = np.asarray(values, dtype=np.complex128)
    return np.lexsort((values.imag, values.real))


def min_gap(values):
    """Smallest pairwise distance between eigenvalues (inf for a single value)."""
    values = np.asarray(values, dtype=np.complex128)
    if values.size < 2:
        return float('inf')
    diffs = np.abs(values[:, None] - values[None, :])
    diffs[np.diag_indices(values.size)] = np.inf
    return float(diffs.min())
