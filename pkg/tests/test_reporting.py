import json

import numpy as np
import pytest

from app.models import RunConfig
from app.reporting import (
    Check, Report, build_report, cmd_boundary, cmd_ep, cmd_evolve, cmd_metric_scan, cmd_spectrum, cmd_verify,
    _product_spectral, jsonable, render_csv, render_json, run_command, t_grid,
)


def test_t_grid_is_inclusive():
    np.testing.assert_allclose(t_grid(0.0, 1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert t_grid(0.01, 3.0, 0.01)[-1] == 3.0
    assert len(t_grid(0.001, 1.2, 0.001)) == 1200


def test_cmd_spectrum(app):
    columns, rows = cmd_spectrum(RunConfig('spectrum', model='four', t_min=0.5, t_max=1.5, t_step=0.5))
    assert columns == ['t', 'E1', 'E2', 'E3', 'E4']
    assert len(rows) == 3
    assert rows[0] == pytest.approx([0.5, 2.5, 3.5, 4.5, 5.5])
    assert rows[2] == pytest.approx([1.5, -0.5, 2.5, 5.5, 8.5])


def test_cmd_spectrum_threads_do_not_change_rows(app):
    config = RunConfig('spectrum', t_min=0.1, t_max=2.0, t_step=0.1)
    pooled = RunConfig('spectrum', t_min=0.1, t_max=2.0, t_step=0.1, threads=3)
    assert cmd_spectrum(config) == cmd_spectrum(pooled)


def test_cmd_metric_scan_figure_one(app):
    """Every trace is rescaled so its top eigenvalue starts at 1."""
    trace = cmd_metric_scan(RunConfig('scan', figure='fig1'))
    assert trace.figure == 'fig1'
    assert trace.columns[:3] == ['t', 'rho0_theta1', 'rho0_theta2']
    assert trace.columns[-5:] == [f"rho{rho}_regime" for rho in range(5)]
    assert len(trace.rows) == 300
    first = trace.rows[0]
    for k in range(5):
        assert first[2 + 2 * k].real == pytest.approx(1.0)
    assert trace.regimes[0][0] == 'unitary'
    assert trace.regimes[0][-1] == 'complex'


def test_cmd_metric_scan_top_branches(app):
    trace = cmd_metric_scan(RunConfig('scan', figure='fig3'))
    assert trace.columns == ['t', 'rho1_theta1', 'rho1_theta2', 'rho2_theta1', 'rho2_theta2',
                             'rho3_theta1', 'rho3_theta2', 'rho1_regime', 'rho2_regime', 'rho3_regime']
    assert len(trace.rows) == 200


def test_cmd_metric_scan_without_rescale(app):
    trace = cmd_metric_scan(RunConfig('scan', figure='fig2'))
    assert trace.rescale == {0: 1.0}
    assert trace.rows[0][4].real == pytest.approx(8.0, abs=1e-4)


def test_cmd_boundary(app):
    result = cmd_boundary(RunConfig('boundary', model='two', rho=[0, 1], t_min=0.0, t_max=5.0))
    assert result[0]['t_rho'] == pytest.approx(1.0, abs=1e-9)
    assert result[0]['transition'] == 'unitary->complex'
    assert result[1]['t_rho'] == pytest.approx(2.0, abs=1e-9)
    assert result[1]['boundaries'][0]['right'] == 'krein'


def test_cmd_boundary_without_exit(app):
    result = cmd_boundary(RunConfig('boundary', model='two', rho=[0], t_min=0.1, t_max=0.9))
    entry = result[0]
    assert (entry['t_rho'], entry['transition'], entry['boundaries'], entry['touches']) == (None, None, [], [])
    assert entry['scan'].first_exit() is None


def test_cmd_ep(app):
    report = cmd_ep(RunConfig('ep', model='two', t_center=0.0, radius=0.5))
    assert report.is_ep
    assert report.metric_rank == 1


def test_cmd_evolve_stationary(app):
    result = cmd_evolve(RunConfig('evolve', model='two', rho=[0, 2], t_point=0.5, horizon=20.0, steps=100))
    assert set(result) == {0, 2}
    assert all(record.drift <= 1e-8 for record in result.values())


def test_cmd_evolve_nonstationary(app):
    result = cmd_evolve(RunConfig('evolve', model='two', rho=[0], mode='nonstationary',
                                  t_min=0.3, t_max=0.8, steps=200))
    assert result[0].drift <= 1e-6


def test_check_relations():
    assert Check('small', 1e-12, 1e-10).passed
    assert not Check('small', 1e-9, 1e-10).passed
    assert Check('large', float('inf'), 1e5, '>=').passed
    assert not Check('missing', float('nan'), 1.0).passed
    assert not Check('raised', 0.0, 1.0, error='boom').passed


@pytest.mark.slow
def test_verify_passes(app):
    result = cmd_verify(RunConfig('verify'))
    failed = [c['name'] for c in result['checks'] if not c['passed']]
    assert failed == []
    assert result['passed']
    assert len(result['checks']) == 20


@pytest.mark.slow
def test_verify_detects_wrong_metric(app):
    result = cmd_verify(RunConfig('verify', inject_identity=True))
    by_name = {c['name']: c for c in result['checks']}
    assert not by_name['quasi_hermiticity']['passed']
    assert not result['passed']


def test_jsonable():
    assert jsonable(1 + 2j) == [1.0, 2.0]
    assert jsonable({1: np.float64(0.5), 'x': [np.int64(3), True]}) == {'1': 0.5, 'x': [3, True]}
    assert jsonable(np.array([1j])) == [[0.0, 1.0]]


def test_jsonable_maps_non_finite_to_null():
    assert jsonable(float('nan')) is None
    assert jsonable(np.float64('inf')) is None
    assert jsonable(complex(float('nan'), 1.0)) == [None, 1.0]
    assert jsonable({'condition': float('inf'), 'gap': 0.5}) == {'condition': None, 'gap': 0.5}


def test_render_json_writes_null_for_undefined_values():
    """Output stays strict JSON when a trace has undefined points."""
    report = Report('scan', [], [], document=jsonable({'rows': [[0.5, float('nan')]]}))
    text = render_json(report)
    assert 'NaN' not in text
    assert json.loads(text) == {'rows': [[0.5, None]]}


def test_render_csv():
    report = Report('ep', ['t_ep', 'metric_rank', 'is_ep', 'note'], [[0.5, 1, True, None]])
    assert render_csv(report) == 't_ep,metric_rank,is_ep,note\n5.0000000000000000e-01,1,true,\n'


def test_render_json_is_sorted():
    report = Report('ep', [], [], document={'b': 1, 'a': [1.5]})
    text = render_json(report)
    assert text.endswith('}\n')
    assert list(json.loads(text)) == ['a', 'b']


def test_build_report_boundary(app):
    config = RunConfig('boundary', rho=[1])
    report = build_report(config, {1: {'t_rho': 2.0, 'transition': 'unitary->krein', 'boundaries': [], 'touches': []}})
    assert report.columns == ['rho', 't_rho', 'transition']
    assert report.rows == [[1, 2.0, 'unitary->krein']]
    assert report.document['rho']['1']['t_rho'] == 2.0


def test_run_command_reports_failure(app):
    success, message = run_command(RunConfig('spectrum', model='nope'))
    assert not success
    assert message == "unknown model 'nope'"


def test_run_command_success(app):
    success, report = run_command(RunConfig('ep', model='two'))
    assert success
    assert report.document['is_ep'] is True


def test_cmd_spectrum_examples(app):
    _, rows = cmd_spectrum(RunConfig('spectrum', model='two', t_min=0.0, t_max=0.25, t_step=0.25))
    assert rows[0] == pytest.approx([0.0, 2.0, 2.0], abs=1e-7)
    assert rows[1] == pytest.approx([0.25, 1.75, 2.25])
    _, rows = cmd_spectrum(RunConfig('spectrum', model='four', t_min=0.25, t_max=0.5, t_step=0.25))
    assert rows[0] == pytest.approx([0.25, 3.25, 3.75, 4.25, 4.75])


def test_fig2_positive_below_supremum(app):
    trace = cmd_metric_scan(RunConfig('scan', figure='fig2'))
    row = trace.rows[499]
    assert row[0] == 0.5
    values = [z.real for z in row[1:5]]
    assert all(v > 0 for v in values)
    assert max(values) < 8.0


def test_fig3_rho3_beyond_t0(app):
    trace = cmd_metric_scan(RunConfig('scan', figure='fig3'))
    row = trace.rows[149]
    assert row[0] == 1.5
    assert all(z.real > 0 for z in row[5:7])


def test_scan_output_is_deterministic(app):
    """Same config gives byte-identical CSV for any thread count."""
    outputs = []
    for threads in (1, 1, 4):
        config = RunConfig('scan', figure='fig3', threads=threads)
        outputs.append(render_csv(build_report(config, cmd_metric_scan(config))))
    assert outputs[0] == outputs[1] == outputs[2]


def test_scan_report_survives_json(app):
    from app.models import ScanReport
    from app.regime_scanner import scan

    report = scan('two', 2, 0.0, 5.0, grid_points=50)
    restored = ScanReport.from_dict(json.loads(json.dumps(report.to_dict())))
    assert restored.to_dict() == report.to_dict()
    assert restored.first_exit() == report.first_exit()


@pytest.mark.slow
def test_cmd_boundary_all_orders(app):
    from app.toy_models import cardano_t2, t4_numeric

    result = cmd_boundary(RunConfig('boundary', model='two', rho=[0, 1, 2, 3, 4]))
    expected = {0: (1.0, 1e-9), 1: (2.0, 1e-9), 2: (cardano_t2(), 1e-8), 3: (2.0, 1e-9), 4: (t4_numeric(), 1e-8)}
    for rho, (t_rho, accuracy) in expected.items():
        assert result[rho]['t_rho'] == pytest.approx(t_rho, abs=accuracy)
    four = cmd_boundary(RunConfig('boundary', model='four', rho=[0]))
    assert four[0]['t_rho'] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_verify_with_tight_tolerance_reports_failures(app):
    result = cmd_verify(RunConfig('verify', tol=1e-15))
    assert not result['passed']
    assert all(c['threshold'] == 1e-15 for c in result['checks'] if c['relation'] == '<=')


def test_scan_csv_keeps_imaginary_parts(app):
    """Past t = 1 the rho = 0 pair is complex conjugate; both parts reach the CSV."""
    config = RunConfig('scan', figure='fig1')
    trace = cmd_metric_scan(config)
    report = build_report(config, trace)
    assert report.columns[:5] == ['t', 'rho0_theta1', 'rho0_theta1_im', 'rho0_theta2', 'rho0_theta2_im']
    assert report.columns[-1] == 'rho4_regime'
    assert all(len(row) == len(report.columns) for row in report.rows)

    row = report.rows[199]
    assert row[0] == 2.0
    assert trace.regimes[0][199] == 'complex'
    assert row[2] != 0.0
    assert row[1] == pytest.approx(row[3])
    assert row[2] == pytest.approx(-row[4])
    assert report.rows[0][2] == report.rows[0][4] == 0.0
    assert render_csv(report).splitlines()[0].startswith('t,rho0_theta1,rho0_theta1_im,')


@pytest.mark.slow
def test_product_and_spectral_metrics_agree_across_unitary_window():
    assert _product_spectral() <= 1e-10
