import numpy as np
import pytest

from app.dense_linalg import eig_general, eig_hermitian
from app.errors import UnknownModel, UnsupportedRho
from app.metric_engine import quasi_hermiticity_residual
from app.toy_models import (
    FOUR_LEVEL, MODELS, TWO_LEVEL, AnalyticMetricSpectrum, cardano_t2, energies_2, energies_4, get_model, h2, h4,
    model_id, radicand, register_model, t4_numeric, theta0_2, theta0_4, theta0_4_spectrum, theta_rho_2_analytic,
)


@pytest.mark.parametrize('t', [0.3, 0.7, 1.5, 2.5])
def test_energy_formulas(t):
    """Energies stay real and equally spaced on both sides of t = 1."""
    np.testing.assert_allclose(eig_general(h2(t)).eigenvalues, energies_2(t), atol=1e-10)
    np.testing.assert_allclose(eig_general(h4(t)).eigenvalues, energies_4(t), atol=1e-10)


@pytest.mark.parametrize('t', [0.2, 0.5, 0.9])
def test_closed_form_metrics_are_quasi_hermitian(t):
    assert quasi_hermiticity_residual(h2(t), theta0_2(t)) < 1e-13
    assert quasi_hermiticity_residual(h4(t), theta0_4(t)) < 1e-13


def test_theta0_4_spectrum_matches_matrix():
    np.testing.assert_allclose(eig_hermitian(theta0_4(0.5)).eigenvalues, theta0_4_spectrum(0.5), atol=1e-12)


def test_metric_supremum_near_jordan_point():
    assert theta0_4_spectrum(1e-3)[-1].real == pytest.approx(8.0, abs=1e-4)


def test_rho_one_spectrum():
    assert theta_rho_2_analytic(1, 0.5) == (pytest.approx(0.25), pytest.approx(3.75))


@pytest.mark.parametrize('rho', range(5))
def test_analytic_spectrum_matches_matrix_product(rho):
    t = 0.6
    theta = theta0_2(t) @ np.linalg.matrix_power(h2(t), rho)
    expected = sorted(AnalyticMetricSpectrum(rho)(t), key=lambda z: z.real)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(theta).real), np.real(expected), atol=1e-10)


def test_analytic_spectrum_rejects_unsupported():
    with pytest.raises(UnsupportedRho):
        AnalyticMetricSpectrum(5)
    with pytest.raises(UnsupportedRho):
        AnalyticMetricSpectrum(1, model='four')
    with pytest.raises(UnsupportedRho):
        theta_rho_2_analytic(7, 0.5)


def test_cardano_root():
    """Closed-form end of the rho=2 unitary interval is a root of its radicand."""
    t2 = cardano_t2()
    assert t2 == pytest.approx(2.875129794, abs=1e-8)
    assert abs(radicand(2, t2)) < 1e-7


def test_t4_numeric():
    t4 = t4_numeric()
    assert t4 == pytest.approx(4.150651137, abs=1e-8)
    assert radicand(4, t4 - 1e-3) > 0 > radicand(4, t4 + 1e-3)


def test_get_model():
    assert get_model('two') is TWO_LEVEL
    assert get_model(FOUR_LEVEL) is FOUR_LEVEL
    with pytest.raises(UnknownModel) as excinfo:
        get_model('three')
    assert str(excinfo.value) == "unknown model 'three'"


def test_register_model():
    try:
        register_model('two-copy', TWO_LEVEL)
        assert get_model('two-copy') is TWO_LEVEL
        assert model_id(FOUR_LEVEL) == 'four'
    finally:
        MODELS.pop('two-copy', None)
