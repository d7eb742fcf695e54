"""Closed-form two- and four-level models and their analytic oracles.

Both models are written in terms of s = sqrt(1 - t^2) on the principal
branch, so s = i*sqrt(t^2 - 1) for |t| > 1 and every matrix is complex.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from app.errors import UnknownModel, UnsupportedRho
from app.models import ParamOperator

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)


def _s(t):
    return complex(np.emath.sqrt(1.0 - float(t) ** 2))


def h2(t):
    s = _s(t)
    return np.array([[1.0, s], [-s, 3.0]], dtype=np.complex128)


def theta0_2(t):
    s = _s(t)
    return np.array([[1.0, -s], [-s, 1.0]], dtype=np.complex128)


def h4(t):
    s = _s(t)
    return np.array(
        [
            [1.0, SQRT3 * s, 0.0, 0.0],
            [-SQRT3 * s, 3.0, 2.0 * s, 0.0],
            [0.0, -2.0 * s, 5.0, SQRT3 * s],
            [0.0, 0.0, -SQRT3 * s, 7.0],
        ],
        dtype=np.complex128,
    )


def theta0_4(t):
    s = _s(t)
    s2 = s * s
    s3 = s2 * s
    diag = 3.0 - 2.0 * float(t) ** 2
    return np.array(
        [
            [1.0, -SQRT3 * s, SQRT3 * s2, -s3],
            [-SQRT3 * s, diag, -2.0 * s - s3, SQRT3 * s2],
            [SQRT3 * s2, -2.0 * s - s3, diag, -SQRT3 * s],
            [-s3, SQRT3 * s2, -SQRT3 * s, 1.0],
        ],
        dtype=np.complex128,
    )


def theta0_4_spectrum(t):
    """Eigenvalues of theta0_4(t); the matrix is the symmetric cube of theta0_2(t)."""
    s = _s(t)
    p, m = 1.0 + s, 1.0 - s
    values = np.array([m ** 3, p * m ** 2, p ** 2 * m, p ** 3], dtype=np.complex128)
    return values[np.lexsort((values.imag, values.real))]


def energies_2(t):
    t = float(t)
    return np.sort(np.array([2.0 - t, 2.0 + t]))


def energies_4(t):
    t = float(t)
    return np.sort(np.array([4.0 - 3.0 * t, 4.0 - t, 4.0 + t, 4.0 + 3.0 * t]))


# (centre, radicand) coefficients in u = t^2 for rho = 2..4; theta = centre -/+ sqrt(radicand)
_RHO_FORMS = {
    2: ((4.0, 1.0), (16.0, -8.0, 9.0, -1.0)),
    3: ((8.0, 6.0), (64.0, 32.0, 84.0, -12.0, 1.0)),
    4: ((16.0, 24.0, 1.0), (256.0, 512.0, 864.0, -48.0, 17.0, -1.0)),
}


def radicand(rho, t):
    """Discriminant polynomial under the square root of the rho-th metric eigenvalues."""
    if rho not in _RHO_FORMS:
        raise UnsupportedRho(f"no radicand polynomial for rho={rho}")
    return float(Polynomial(_RHO_FORMS[rho][1])(float(t) ** 2))


def theta_rho_2_analytic(rho, t):
    """Closed-form eigenvalue pair (theta_minus, theta_plus) of the two-level metric of order rho."""
    t = float(t)
    if rho == 0:
        s = _s(t)
        return complex(1.0 - s), complex(1.0 + s)
    if rho == 1:
        return complex(t * t), complex(4.0 - t * t)
    if rho not in _RHO_FORMS:
        raise UnsupportedRho(f"closed-form two-level metric spectrum exists for rho in 0..4, got {rho}")
    centre = float(Polynomial(_RHO_FORMS[rho][0])(t * t))
    root = complex(np.emath.sqrt(radicand(rho, t)))
    return centre - root, centre + root


@dataclass(frozen=True)
class AnalyticMetricSpectrum:
    rho: int
    model: str = 'two'

    def __post_init__(self):
        if self.model != 'two':
            raise UnsupportedRho(f"analytic metric spectra exist for the two-level model only, not {self.model!r}")
        if self.rho not in range(5):
            raise UnsupportedRho(f"closed-form two-level metric spectrum exists for rho in 0..4, got {self.rho}")

    def __call__(self, t):
        return theta_rho_2_analytic(self.rho, t)


def cardano_t2():
    """Upper end of the rho=2 unitarity interval in closed form."""
    c = np.cbrt(73.0 + 6.0 * np.sqrt(87.0))
    return float((1.0 + c + 13.0 / c) / 3.0)


def t4_numeric():
    """Smallest positive t where the rho=4 radicand changes sign (a quintic in t^2)."""
    roots = Polynomial(_RHO_FORMS[4][1]).roots()
    candidates = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real > 0)
    if not candidates:
        raise ValueError("rho=4 radicand has no positive root")
    return float(np.sqrt(candidates[0]))


@dataclass(frozen=True)
class ToyModel:
    name: str
    dim: int
    hamiltonian: ParamOperator
    metric0: Optional[ParamOperator] = None
    energy_formula: Optional[Callable[[float], np.ndarray]] = None


TWO_LEVEL = ToyModel(name='TwoLevel', dim=2, hamiltonian=h2, metric0=theta0_2, energy_formula=energies_2)
FOUR_LEVEL = ToyModel(name='FourLevel', dim=4, hamiltonian=h4, metric0=theta0_4, energy_formula=energies_4)

MODELS = {
    'two': TWO_LEVEL,
    'four': FOUR_LEVEL,
}


def register_model(model_id, model):
    if model_id in MODELS and MODELS[model_id] is not model:
        logger.warning(f"Replacing registered model {model_id!r}")
    MODELS[model_id] = model
    logger.info(f"Registered model {model_id!r} ({model.name}, N={model.dim})")
    return model


def get_model(model):
    """Resolve a model id (or pass a ToyModel through)."""
    if isinstance(model, ToyModel):
        return model
    try:
        return MODELS[model]
    except (KeyError, TypeError):
        raise UnknownModel(model) from None


def model_id(model):
    if isinstance(model, str):
        return model
    for key, value in MODELS.items():
        if value is model:
            return key
    return model.name
