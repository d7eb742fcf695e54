import numpy as np
import pytest

from app.metric_engine import MetricFamily
from app.models import RegimeKind
from app.regime_scanner import boundary_scan, classify_metric, classify_point, ep_probe, evaluate_point, scan
from app.toy_models import TWO_LEVEL, cardano_t2, t4_numeric


@pytest.mark.parametrize('theta, kind', [
    (np.eye(2), RegimeKind.UNITARY_METRIC),
    (np.diag([1.0, -1.0]), RegimeKind.KREIN_PSEUDO_METRIC),
    (np.diag([1.0, 0.0]), RegimeKind.SINGULAR_METRIC),
    (np.array([[1.0, 2.0], [-2.0, 1.0]]), RegimeKind.COMPLEX_SPECTRUM),
])
def test_classify_metric(theta, kind):
    assert classify_metric(theta).kind is kind


def test_classify_metric_witness():
    """The witness lists the offending eigenvalues."""
    result = classify_metric(np.diag([-2.0, 1.0, 3.0]))
    assert result.kind is RegimeKind.KREIN_PSEUDO_METRIC
    assert result.witness == (-2.0 + 0j,)
    assert result.hermitian


def test_singular_takes_precedence_over_krein():
    assert classify_metric(np.diag([-1.0, 0.0, 1.0])).kind is RegimeKind.SINGULAR_METRIC


@pytest.mark.parametrize('rho, t, kind', [
    (0, 0.5, RegimeKind.UNITARY_METRIC),
    (0, 1.5, RegimeKind.COMPLEX_SPECTRUM),
    (1, 1.5, RegimeKind.UNITARY_METRIC),
    (1, 2.5, RegimeKind.KREIN_PSEUDO_METRIC),
    (2, 3.0, RegimeKind.COMPLEX_SPECTRUM),
])
def test_classify_point_two_level(rho, t, kind):
    assert classify_point('two', rho, t).kind is kind


def test_evaluate_point_at_degenerate_spectrum_is_singular():
    family = MetricFamily(TWO_LEVEL.hamiltonian)
    eigs, classification = evaluate_point(family, 2, 0, 0.0, 1e-8)
    assert classification.kind is RegimeKind.SINGULAR_METRIC
    assert np.all(np.isnan(eigs))


@pytest.mark.parametrize('rho, expected, accuracy, label', [
    (0, 1.0, 1e-9, 'unitary->complex'),
    (1, 2.0, 1e-9, 'unitary->krein'),
    (2, cardano_t2(), 1e-8, 'unitary->complex'),
])
def test_two_level_unitarity_boundaries(rho, expected, accuracy, label):
    report = scan('two', rho, 0.0, 5.0)
    exit_boundary = report.first_exit()
    assert exit_boundary is not None
    assert exit_boundary.t == pytest.approx(expected, abs=accuracy)
    assert exit_boundary.label == label


def test_double_zero_of_determinant_is_a_touch():
    """rho=2 touches a zero eigenvalue at t=2 without leaving the unitary regime."""
    report = scan('two', 2, 1.9, 2.1, grid_points=201)
    assert report.boundaries == []
    assert len(report.touches) == 1
    assert report.touches[0] == pytest.approx(2.0, abs=1e-3)


def test_scan_trace_layout():
    report = scan('two', 0, 0.0, 2.0, grid_points=41)
    # t = 0 is the exceptional point and is dropped from the grid
    assert report.t_grid[0] == pytest.approx(0.05)
    assert len(report.t_grid) == len(report.eigen_traces) == len(report.classifications) == 40
    assert report.t_grid == sorted(report.t_grid)
    assert report.model == 'two'


def test_scan_is_independent_of_thread_count():
    single = scan('two', 1, 0.0, 3.0, grid_points=120)
    pooled = scan('two', 1, 0.0, 3.0, grid_points=120, threads=4)
    assert [b.to_dict() for b in single.boundaries] == [b.to_dict() for b in pooled.boundaries]
    assert [c.kind for c in single.classifications] == [c.kind for c in pooled.classifications]


@pytest.mark.slow
def test_four_level_unitarity_boundary():
    report = scan('four', 0, 0.0, 5.0)
    exit_boundary = report.first_exit()
    assert exit_boundary.t == pytest.approx(1.0, abs=1e-9)
    assert exit_boundary.right is RegimeKind.COMPLEX_SPECTRUM


def test_boundary_scan_returns_ascending_list():
    boundaries = boundary_scan('two', 1, 0.0, 5.0)
    assert [b.t for b in boundaries] == sorted(b.t for b in boundaries)
    assert boundaries[0].t == pytest.approx(2.0, abs=1e-8)


def test_boundary_scan_without_change():
    assert boundary_scan('two', 0, 0.1, 0.9) == []


def test_scan_rejects_empty_interval():
    with pytest.raises(ValueError):
        scan('two', 0, 1.0, 1.0)


def test_ep_probe_two_level():
    report = ep_probe('two', 0.0, 0.5)
    assert abs(report.t_ep) < 1e-6
    assert report.is_ep
    assert report.metric_rank == 1
    assert report.eigvec_condition >= 100


def test_ep_probe_four_level():
    report = ep_probe('four', 0.0, 0.5)
    assert abs(report.t_ep) < 1e-6
    assert report.min_gap <= 1e-2
    assert report.metric_rank == 1
    assert report.is_ep


def test_ep_probe_away_from_ep():
    report = ep_probe('two', 0.5, 0.1)
    assert report.t_ep == pytest.approx(0.4, abs=1e-6)
    assert report.min_gap == pytest.approx(0.8, abs=1e-5)
    assert not report.is_ep
    assert report.metric_rank == 2


def test_ep_probe_rejects_non_positive_radius():
    with pytest.raises(ValueError):
        ep_probe('two', 0.0, 0.0)


@pytest.mark.slow
@pytest.mark.parametrize('rho, right', [
    (1, RegimeKind.KREIN_PSEUDO_METRIC),
    (2, RegimeKind.COMPLEX_SPECTRUM),
    (3, RegimeKind.KREIN_PSEUDO_METRIC),
    (4, RegimeKind.COMPLEX_SPECTRUM),
])
def test_parity_of_transition_kinds(rho, right):
    """Odd orders lose positivity, even orders complexify."""
    exit_boundary = scan('two', rho, 0.0, 5.0).first_exit()
    assert exit_boundary.right is right


@pytest.mark.slow
def test_higher_order_boundaries():
    assert scan('two', 3, 0.0, 5.0).first_exit().t == pytest.approx(2.0, abs=1e-9)
    assert scan('two', 4, 0.0, 5.0).first_exit().t == pytest.approx(t4_numeric(), abs=1e-8)


@pytest.mark.parametrize('rho', [0, 2])
def test_classification_brackets_boundary(rho):
    tol_t = 1e-10
    exit_boundary = scan('two', rho, 0.0, 5.0, tol_t=tol_t).first_exit()
    assert classify_point('two', rho, exit_boundary.t - 10 * tol_t).kind is exit_boundary.left
    assert classify_point('two', rho, exit_boundary.t + 10 * tol_t).kind is exit_boundary.right


def test_refinement_is_monotone():
    coarse = scan('two', 2, 0.0, 5.0, tol_t=1e-6).first_exit().t
    fine = scan('two', 2, 0.0, 5.0, tol_t=5e-7).first_exit().t
    assert abs(coarse - fine) <= 1e-6


@pytest.mark.parametrize('rho', range(5))
def test_classification_ignores_metric_scale(rho):
    family = MetricFamily.for_model(TWO_LEVEL)
    for t in np.linspace(0.1, 4.9, 25):
        theta = family.theta(t, rho)
        assert classify_metric(3.7 * theta).kind is classify_metric(theta).kind


@pytest.mark.slow
def test_four_level_boundaries_grow_with_rho():
    """Higher metric orders keep the four-level metric unitary beyond t_0 = 1."""
    exits = [scan('four', rho, 0.0, 5.0).first_exit() for rho in (1, 2, 3)]
    assert all(b.label == 'unitary->complex' for b in exits)
    t1, t2, t3 = (b.t for b in exits)
    assert 1.0 < t1 < t2 < t3
