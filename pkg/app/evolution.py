"""Time evolution under a quasi-Hermitian Hamiltonian.

Stationary propagation uses a separate clock s with H frozen; the
non-stationary propagator uses the model parameter t itself as time and the
generator G(t) = H(t) - Sigma(t), Sigma = i Omega^-1 dOmega/dt.
"""
import logging
from functools import lru_cache

import numpy as np
import scipy.linalg

from app.dense_linalg import DEFAULT_CLASSIFY_TOL, eig_general, hermitian_sqrt, numeric_rank
from app.errors import IndefiniteMetric, QuasiHermiticityViolated, RegimeViolation, SingularOmega
from app.metric_engine import MetricFamily, quasi_hermiticity_residual
from app.models import PropagationRecord, RegimeKind
from app.regime_scanner import classify_metric
from app.toy_models import get_model
from app.utils.numeric import as_matrix

logger = logging.getLogger(__name__)

STATIONARY_RESIDUAL_TOL = 1e-8
EIGEN_PATH_MAX_CONDITION = 1e6
DEFAULT_FD_STEP = 1e-5


def physical_norm(psi, theta):
    return float(np.real(np.vdot(psi, theta @ psi)))


def _relative_drift(norms):
    norms = np.asarray(norms, dtype=float)
    return float(np.max(np.abs(norms - norms[0])) / abs(norms[0]))


def _state(psi0, dim):
    if psi0 is None:
        return np.ones(dim, dtype=np.complex128) / np.sqrt(dim)
    psi0 = np.asarray(psi0, dtype=np.complex128).reshape(-1)
    if psi0.shape != (dim,) or not np.all(np.isfinite(psi0)):
        raise ValueError(f"initial state must be {dim} finite amplitudes")
    return psi0


def _record(samples, states, metrics, coriolis_spectra=None):
    norms = np.array([physical_norm(psi, theta) for psi, theta in zip(states, metrics)])
    dirac = np.array([float(np.real(np.vdot(psi, psi))) for psi in states])
    return PropagationRecord(
        samples=samples,
        states=states,
        physical_norms=norms,
        drift=_relative_drift(norms),
        dirac_norms=dirac,
        dirac_drift=_relative_drift(dirac),
        coriolis_spectra=coriolis_spectra or [],
    )


def propagate_stationary(h, theta, psi0, horizon, steps):
    """psi(s) = exp(-iHs) psi0 on s in [0, horizon]."""
    h = as_matrix(h, 'H')
    theta = as_matrix(theta, 'theta')
    psi0 = _state(psi0, h.shape[0])
    if steps < 1 or horizon <= 0:
        raise ValueError(f"need steps >= 1 and horizon > 0, got {steps}, {horizon}")

    residual = quasi_hermiticity_residual(h, theta)
    if residual > STATIONARY_RESIDUAL_TOL:
        raise QuasiHermiticityViolated(residual, STATIONARY_RESIDUAL_TOL)
    lowest = float(np.linalg.eigvalsh((theta + theta.conj().T) / 2)[0])
    if lowest <= 0:
        raise IndefiniteMetric(f"metric is not positive definite: lowest eigenvalue {lowest:.3e}")

    samples = np.linspace(0.0, float(horizon), int(steps) + 1)
    decomposition = eig_general(h)
    if decomposition.condition <= EIGEN_PATH_MAX_CONDITION:
        vectors = decomposition.right_vectors
        coefficients = scipy.linalg.solve(vectors, psi0)
        phases = np.exp(-1j * np.outer(samples, decomposition.eigenvalues))
        states = (phases * coefficients[None, :]) @ vectors.T
    else:
        logger.info(f"eigenvector condition {decomposition.condition:.3e}; propagating with expm")
        states = np.array([scipy.linalg.expm(-1j * h * s) @ psi0 for s in samples])
    return _record(samples, states, [theta] * len(samples))


def coriolis(omega_of_t, t, dt):
    """Sigma(t) = i Omega(t)^-1 (Omega(t+dt) - Omega(t-dt)) / (2 dt)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    centre = as_matrix(omega_of_t(t), 'omega')
    if numeric_rank(centre, 1e-12) < centre.shape[0]:
        raise SingularOmega(t)
    derivative = (as_matrix(omega_of_t(t + dt)) - as_matrix(omega_of_t(t - dt))) / (2.0 * dt)
    try:
        return 1j * scipy.linalg.solve(centre, derivative)
    except np.linalg.LinAlgError as e:
        raise SingularOmega(t) from e


def _rk4_step(psi, generator, t, dt):
    k1 = -1j * generator(t) @ psi
    k2 = -1j * generator(t + dt / 2) @ (psi + dt * k1 / 2)
    k3 = -1j * generator(t + dt / 2) @ (psi + dt * k2 / 2)
    k4 = -1j * generator(t + dt) @ (psi + dt * k3)
    return psi + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def propagate_nonstationary(model, rho, t0, t1, steps, psi0=None, fd_step=DEFAULT_FD_STEP,
                            tol=DEFAULT_CLASSIFY_TOL, kappa=None):
    """Integrate i dpsi/dt = (H(t) - Sigma(t)) psi with classical fourth-order Runge-Kutta."""
    model = get_model(model)
    if not t0 < t1 or steps < 1:
        raise ValueError(f"need t0 < t1 and steps >= 1, got [{t0}, {t1}] with {steps} steps")
    family = MetricFamily.for_model(model, kappa=kappa)
    samples = np.linspace(float(t0), float(t1), int(steps) + 1)

    metrics = []
    for t in samples:
        theta = family.theta(t, rho)
        kind = classify_metric(theta, tol).kind
        if kind is not RegimeKind.UNITARY_METRIC:
            raise RegimeViolation(float(t), kind.value)
        metrics.append(theta)

    def omega(t):
        return hermitian_sqrt(family.theta(t, rho))

    @lru_cache(maxsize=16)
    def sigma(t):
        return coriolis(omega, t, fd_step)

    def generator(t):
        return family.hamiltonian(t) - sigma(t)

    psi = _state(psi0, model.dim)
    states = [psi]
    spectra = [scipy.linalg.eigvals(sigma(samples[0]))]
    dt = (samples[-1] - samples[0]) / steps
    for k in range(int(steps)):
        psi = _rk4_step(psi, generator, samples[k], dt)
        states.append(psi)
        spectra.append(scipy.linalg.eigvals(sigma(samples[k + 1])))

    record = _record(samples, np.array(states), metrics, spectra)
    logger.info(f"non-stationary propagation rho={rho} on [{t0}, {t1}]: drift {record.drift:.3e}")
    return record


def convergence_ratios(model, rho, t0, t1, steps, levels=3, **kwargs):
    """Final-state differences for steps, 2*steps, 4*steps, ... and their successive ratios.

    A fourth-order integrator gives ratios close to 16.
    """
    finals = []
    for level in range(levels):
        record = propagate_nonstationary(model, rho, t0, t1, steps * 2 ** level, **kwargs)
        finals.append(record.states[-1])
    differences = [float(np.linalg.norm(a - b)) for a, b in zip(finals, finals[1:])]
    return [a / b for a, b in zip(differences, differences[1:])]


def isometry_norms(record, model, rho, kappa=None):
    """Euclidean norms of Omega(t) psi(t) along a non-stationary record."""
    family = MetricFamily.for_model(get_model(model), kappa=kappa)
    return np.array([
        float(np.linalg.norm(hermitian_sqrt(family.theta(t, rho)) @ psi))
        for t, psi in zip(record.samples, record.states)
    ])
