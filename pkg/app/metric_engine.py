"""Dyson maps, metric families and Hermitization.

A ketket basis is the eigenbasis of H^dagger. Every positive weight vector
kappa turns it into an admissible metric

    Theta(kappa) = sum_n psi_n kappa_n^2 psi_n^dagger = Omega^dagger Omega,

and Theta_rho = Theta_0 H^rho reweights the same basis by E_n^rho.
"""
import logging
import threading

import numpy as np
import scipy.linalg

from app.dense_linalg import DEFAULT_TOL, eig_general, hermitian_sqrt
from app.errors import (
    CalibrationError,
    DegenerateSpectrum,
    IndefiniteMetric,
    InvalidMatrix,
    NonPositiveWeight,
    NonRealSpectrum,
    NotHermitian,
    QuasiHermiticityViolated,
    UnsupportedRho,
)
from app.models import DysonMap, KetKetBasis
from app.utils.numeric import as_matrix, check_tol, fro, min_gap, relative_asymmetry

logger = logging.getLogger(__name__)

CALIBRATION_TOL = 1e-8


def ketket_basis(h, tol=DEFAULT_TOL):
    """Eigenbasis of H^dagger with real, strictly ascending energies."""
    h = as_matrix(h, 'H')
    tol = check_tol(tol)
    norm = fro(h)
    decomposition = eig_general(h.conj().T, tol)
    energies = decomposition.eigenvalues

    # A perturbation of size tol splits a double eigenvalue by O(sqrt(tol)).
    gap = min_gap(energies)
    threshold = np.sqrt(tol) * norm
    if gap <= threshold:
        raise DegenerateSpectrum(gap, threshold, witness=energies)
    if np.max(np.abs(energies.imag)) > tol * norm:
        raise NonRealSpectrum(energies)
    return KetKetBasis(energies=energies.real.copy(), vectors=decomposition.right_vectors)


def _weights(kappa, dim):
    kappa = np.asarray(kappa, dtype=float).reshape(-1)
    if kappa.shape != (dim,):
        raise NonPositiveWeight(f"expected {dim} weights, got {kappa.shape[0]}")
    if not np.all(np.isfinite(kappa)) or np.any(kappa <= 0):
        raise NonPositiveWeight(f"weights must be positive and finite: {kappa.tolist()}")
    return kappa


def dyson_map(basis, kappa):
    kappa = _weights(kappa, basis.dim)
    # Omega^dagger has columns kappa_n * psi_n.
    omega_dagger = basis.vectors * kappa[None, :]
    return DysonMap(omega=omega_dagger.conj().T, kappa=kappa)


def metric_kappa(basis, kappa):
    kappa = _weights(kappa, basis.dim)
    return (basis.vectors * (kappa ** 2)[None, :]) @ basis.vectors.conj().T


def metric_rho(theta0, h, rho, tol=DEFAULT_TOL, check=True):
    """Theta_0 H^rho by repeated multiplication."""
    theta0 = as_matrix(theta0, 'theta0')
    h = as_matrix(h, 'H')
    if int(rho) != rho or rho < 0:
        raise UnsupportedRho(f"rho must be a non-negative integer, got {rho!r}")
    if check:
        residual = quasi_hermiticity_residual(h, theta0)
        if residual > tol:
            raise QuasiHermiticityViolated(residual, tol)
    result = theta0.copy()
    for _ in range(int(rho)):
        result = result @ h
    return result


def metric_rho_spectral(basis, kappa, rho):
    kappa = _weights(kappa, basis.dim)
    if int(rho) != rho or rho < 0:
        raise UnsupportedRho(f"rho must be a non-negative integer, got {rho!r}")
    weights = kappa ** 2 * basis.energies ** int(rho)
    return (basis.vectors * weights[None, :]) @ basis.vectors.conj().T


def quasi_hermiticity_residual(h, theta):
    """||H^dagger Theta - Theta H|| / (||H|| ||Theta||)."""
    h = as_matrix(h, 'H')
    theta = as_matrix(theta, 'theta')
    if h.shape != theta.shape:
        raise InvalidMatrix(f"dimension mismatch: H {h.shape} vs theta {theta.shape}")
    scale = fro(h) * fro(theta)
    if scale == 0.0:
        return 0.0
    return fro(h.conj().T @ theta - theta @ h) / scale


def calibrate_kappa(basis, target, tol=CALIBRATION_TOL):
    """Weights kappa with metric_kappa(basis, kappa) == target.

    The diagonal of Theta(kappa) is linear in w = kappa^2; we solve that
    system (least squares over every entry, since the diagonal alone can be
    rank deficient for symmetric models) and then demand that the whole
    matrix, off-diagonals included, is reproduced.
    """
    target = as_matrix(target, 'target')
    dim = basis.dim
    if target.shape != (dim, dim):
        raise InvalidMatrix(f"target shape {target.shape} does not match basis dimension {dim}")
    columns = [np.outer(basis.vectors[:, n], basis.vectors[:, n].conj()).reshape(-1) for n in range(dim)]
    system = np.stack(columns, axis=1)
    w, *_ = scipy.linalg.lstsq(system, target.reshape(-1))
    w = w.real
    if np.any(w <= 0):
        raise CalibrationError(f"target metric needs non-positive weights {w.tolist()}")
    kappa = np.sqrt(w)
    mismatch = fro(metric_kappa(basis, kappa) - target) / fro(target)
    if mismatch > tol:
        raise CalibrationError(f"calibrated metric misses target by {mismatch:.3e} (> {tol:.1e})")
    return kappa


def hermitize(h, theta, tol=DEFAULT_TOL):
    """Hermitian partner Omega H Omega^-1 with Omega the positive square root of theta."""
    h = as_matrix(h, 'H')
    theta = as_matrix(theta, 'theta')
    residual = quasi_hermiticity_residual(h, theta)
    if residual > tol:
        raise QuasiHermiticityViolated(residual, tol)
    if relative_asymmetry(theta) > tol:
        raise NotHermitian(relative_asymmetry(theta), tol)
    lowest = float(np.linalg.eigvalsh((theta + theta.conj().T) / 2)[0])
    if lowest <= tol * fro(theta):
        raise IndefiniteMetric(f"metric is not positive definite: lowest eigenvalue {lowest:.3e}")

    omega = hermitian_sqrt(theta, tol)
    # X Omega = Omega H  <=>  Omega^T X^T = (Omega H)^T
    partner = scipy.linalg.solve(omega.T, (omega @ h).T).T
    asymmetry = relative_asymmetry(partner)
    if asymmetry > 10 * tol:
        logger.warning(f"Hermitian partner asymmetry {asymmetry:.3e} exceeds {10 * tol:.1e}")
    return partner


class MetricFamily:
    """Theta_rho(t) for a parametrised Hamiltonian.

    With a closed-form metric0 the family uses it directly as Theta_0; otherwise
    Theta_0 is metric_kappa over the ketket basis at t, which is cached per t.
    """

    def __init__(self, hamiltonian, metric0=None, kappa=None, tol=DEFAULT_TOL):
        self.hamiltonian = hamiltonian
        self.metric0 = metric0
        self.kappa = None if kappa is None else np.asarray(kappa, dtype=float)
        self.tol = tol
        self._bases = {}
        self._lock = threading.Lock()

    def basis(self, t):
        t = float(t)
        with self._lock:
            cached = self._bases.get(t)
        if cached is not None:
            return cached
        basis = ketket_basis(self.hamiltonian(t), self.tol)
        with self._lock:
            return self._bases.setdefault(t, basis)

    def kappa_at(self, t):
        if self.kappa is not None:
            return self.kappa
        basis = self.basis(t)
        if self.metric0 is None:
            return np.ones(basis.dim)
        return calibrate_kappa(basis, self.metric0(t))

    def theta0(self, t):
        if self.kappa is None and self.metric0 is not None:
            return as_matrix(self.metric0(t), 'metric0')
        return metric_kappa(self.basis(t), self.kappa_at(t))

    def theta(self, t, rho):
        """Theta_0 H^rho without the quasi-Hermiticity precondition."""
        return metric_rho(self.theta0(t), self.hamiltonian(t), rho, check=False)

    def metric_rho(self, t, rho):
        return metric_rho(self.theta0(t), self.hamiltonian(t), rho, tol=self.tol, check=True)

    def metric_rho_spectral(self, t, rho):
        return metric_rho_spectral(self.basis(t), self.kappa_at(t), rho)

    def dyson_map(self, t):
        return dyson_map(self.basis(t), self.kappa_at(t))

    @classmethod
    def for_model(cls, model, kappa=None, tol=DEFAULT_TOL):
        return cls(model.hamiltonian, metric0=model.metric0, kappa=kappa, tol=tol)
