"""Service layer behind the CLI commands and the JSON endpoints.

Each cmd_* function takes a validated RunConfig and returns its domain result;
run_command() wraps them, turns failures into (False, message) and renders the
result as a Report that can be written as CSV or JSON.
"""
import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from flask import current_app

from app import regime_scanner
from app.dense_linalg import DEFAULT_TOL, eig_general, eig_hermitian, numeric_rank
from app.errors import QHMetricError
from app.evolution import propagate_nonstationary, propagate_stationary
from app.metric_engine import MetricFamily, calibrate_kappa, hermitize, ketket_basis, metric_kappa, metric_rho, \
    metric_rho_spectral, quasi_hermiticity_residual
from app.models import FigureTrace
from app.toy_models import cardano_t2, get_model, h2, model_id, radicand, t4_numeric, theta0_2, theta0_4, \
    theta_rho_2_analytic


@dataclass(frozen=True)
class FigurePreset:
    model: str
    rhos: tuple
    t_min: float
    t_max: float
    t_step: float
    top: Optional[int] = None
    rescale: bool = True


FIGURES = {
    'fig1': FigurePreset('two', (0, 1, 2, 3, 4), 0.01, 3.0, 0.01),
    'fig2': FigurePreset('four', (0,), 0.001, 1.2, 0.001, rescale=False),
    'fig3': FigurePreset('four', (1, 2, 3), 0.01, 2.0, 0.01, top=2),
}


@dataclass
class Report:
    command: str
    columns: list
    rows: list
    document: dict = field(default_factory=dict)


def t_grid(t_min, t_max, t_step):
    """Inclusive grid t_min, t_min + step, ... <= t_max, rounded so sample labels are exact."""
    count = int(np.floor((t_max - t_min) / t_step + 1e-9))
    return np.round(t_min + t_step * np.arange(count + 1), 12)


def _fan_out(function, values, threads):
    # map() keeps submission order, so results are identical for any thread count.
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(function, values))
    return [function(v) for v in values]


def _tol(config):
    return config.tol if config.tol is not None else current_app.config.get('QHMETRIC_TOL', DEFAULT_TOL)


def cmd_spectrum(config):
    """Rows of (t, E1..EN): sorted eigenvalues of H(t) on the configured grid."""
    model = get_model(config.model)
    tol = _tol(config)

    def energies(t):
        values = eig_general(model.hamiltonian(t), tol).eigenvalues
        return [float(t)] + [float(v.real) for v in values]

    rows = _fan_out(energies, t_grid(config.t_min, config.t_max, config.t_step), config.threads)
    columns = ['t'] + [f"E{n + 1}" for n in range(model.dim)]
    return columns, rows


def cmd_metric_scan(config):
    """Metric eigenvalue traces for a figure preset (or the configured model and rho list)."""
    if config.figure:
        preset = FIGURES[config.figure]
    else:
        preset = FigurePreset(config.model, tuple(config.rho), config.t_min, config.t_max, config.t_step)
    model = get_model(preset.model)
    family = MetricFamily.for_model(model, kappa=config.kappa)
    grid = t_grid(preset.t_min, preset.t_max, preset.t_step)

    values, regimes, rescale = {}, {}, {}
    for rho in preset.rhos:
        points = _fan_out(
            lambda t: regime_scanner.evaluate_point(family, model.dim, rho, float(t), config.classify_tol),
            grid,
            config.threads,
        )
        traces = [eigs if preset.top is None else eigs[-preset.top:] for eigs, _ in points]
        scale = 1.0
        if preset.rescale:
            top = traces[0][-1].real
            if np.isfinite(top) and top != 0.0:
                scale = 1.0 / top
            else:
                current_app.logger.warning(f"Cannot rescale rho={rho}: top eigenvalue at t={grid[0]} is {top}")
        rescale[rho] = scale
        values[rho] = [[complex(z) * scale for z in trace] for trace in traces]
        regimes[rho] = [c.kind.value for _, c in points]

    branches = {rho: len(values[rho][0]) for rho in preset.rhos}
    columns = ['t']
    for rho in preset.rhos:
        columns += [f"rho{rho}_theta{k + 1}" for k in range(branches[rho])]
    columns += [f"rho{rho}_regime" for rho in preset.rhos]

    rows = []
    for i, t in enumerate(grid):
        row = [float(t)]
        for rho in preset.rhos:
            row += values[rho][i]
        row += [regimes[rho][i] for rho in preset.rhos]
        rows.append(row)
    current_app.logger.info(f"Metric scan {config.figure or model_id(preset.model)}: {len(rows)} samples, rho={list(preset.rhos)}")
    return FigureTrace(
        figure=config.figure or 'custom',
        columns=columns,
        rows=rows,
        rescale=rescale,
        regimes=regimes,
    )


def cmd_boundary(config):
    """t_rho per rho: the first boundary leaving the unitary regime, or None."""
    result = {}
    for rho in config.rho:
        report = regime_scanner.scan(
            config.model, rho, config.t_min, config.t_max,
            tol_t=config.tol_t,
            tol=config.classify_tol,
            grid_points=config.grid_points,
            ep_exclusion=config.ep_exclusion,
            threads=config.threads,
            kappa=config.kappa,
        )
        exit_boundary = report.first_exit()
        result[rho] = {
            't_rho': exit_boundary.t if exit_boundary else None,
            'transition': exit_boundary.label if exit_boundary else None,
            'boundaries': [b.to_dict() for b in report.boundaries],
            'touches': report.touches,
            'scan': report,
        }
    return result


def cmd_ep(config):
    return regime_scanner.ep_probe(config.model, config.t_center, config.radius, config.ep_tol)


def cmd_evolve(config):
    model = get_model(config.model)
    result = {}
    for rho in config.rho:
        if config.mode == 'stationary':
            family = MetricFamily.for_model(model, kappa=config.kappa, tol=_tol(config))
            record = propagate_stationary(
                model.hamiltonian(config.t_point), family.metric_rho(config.t_point, rho),
                None, config.horizon, config.steps,
            )
        else:
            record = propagate_nonstationary(
                model, rho, config.t_min, config.t_max, config.steps,
                fd_step=config.fd_step, tol=config.classify_tol, kappa=config.kappa,
            )
        result[rho] = record
    return result


# -- verification suite -------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    threshold: float
    relation: str = '<='
    error: Optional[str] = None

    @property
    def passed(self):
        if self.error is not None or np.isnan(self.value):
            return False
        if self.relation == '<=':
            return self.value <= self.threshold
        return self.value >= self.threshold

    def to_dict(self):
        return {
            'name': self.name,
            'value': self.value,
            'threshold': self.threshold,
            'relation': self.relation,
            'passed': self.passed,
            'error': self.error,
        }


def _max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _energy_error(model_key):
    model = get_model(model_key)
    # the Jordan point t=0 itself only resolves to sqrt(eps) and is checked by the EP checks
    grid = [t for t in np.linspace(-2.0, 2.0, 41) if abs(t) > 0.05]
    return max(_max_abs(eig_general(model.hamiltonian(t)).eigenvalues, model.energy_formula(t)) for t in grid)


def _metric_oracle_error():
    worst = 0.0
    for rho in range(5):
        for t in np.arange(1, 20) * 0.05:
            computed = eig_hermitian(metric_rho(theta0_2(t), h2(t), rho)).eigenvalues
            expected = sorted(theta_rho_2_analytic(rho, t), key=lambda z: z.real)
            worst = max(worst, _max_abs(computed, expected))
    return worst


def _quasi_hermiticity(inject_identity):
    worst = 0.0
    for key in ('two', 'four'):
        model = get_model(key)
        for t in np.linspace(0.02, 0.98, 50):
            h = model.hamiltonian(t)
            theta0 = np.eye(model.dim) if inject_identity and key == 'two' else model.metric0(t)
            for rho in range(7):
                worst = max(worst, quasi_hermiticity_residual(h, metric_rho(theta0, h, rho, check=False)))
    return worst


def _product_spectral():
    worst = 0.0
    for key in ('two', 'four'):
        model = get_model(key)
        for t in np.linspace(0.02, 0.98, 50):
            h = model.hamiltonian(t)
            basis = ketket_basis(h)
            kappa = calibrate_kappa(basis, model.metric0(t))
            for rho in range(7):
                product = metric_rho(metric_kappa(basis, kappa), h, rho)
                spectral = metric_rho_spectral(basis, kappa, rho)
                worst = max(worst, np.linalg.norm(product - spectral) / np.linalg.norm(product))
    return float(worst)


def _hermitization():
    worst_asymmetry, worst_spectrum = 0.0, 0.0
    for key in ('two', 'four'):
        model = get_model(key)
        for t in (0.25, 0.5, 0.75):
            h = model.hamiltonian(t)
            for rho in range(3):
                partner = hermitize(h, metric_rho(model.metric0(t), h, rho))
                asymmetry = np.linalg.norm(partner - partner.conj().T) / np.linalg.norm(partner)
                worst_asymmetry = max(worst_asymmetry, float(asymmetry))
                worst_spectrum = max(worst_spectrum, _max_abs(np.linalg.eigvalsh((partner + partner.conj().T) / 2),
                                                              model.energy_formula(t)))
    return worst_asymmetry, worst_spectrum


def _boundary_error():
    expected = {0: 1.0, 1: 2.0, 2: cardano_t2(), 3: 2.0, 4: t4_numeric()}
    worst = 0.0
    for rho, t_rho in expected.items():
        found = regime_scanner.scan('two', rho, 0.0, 5.0).first_exit()
        worst = max(worst, abs(found.t - t_rho) if found else float('inf'))
    found = regime_scanner.scan('four', 0, 0.0, 5.0).first_exit()
    return max(worst, abs(found.t - 1.0) if found else float('inf'))


def _stationary_drift():
    rng = np.random.default_rng(7)
    worst = 0.0
    for key in ('two', 'four'):
        model = get_model(key)
        psi0 = rng.normal(size=model.dim) + 1j * rng.normal(size=model.dim)
        for rho in range(3):
            h = model.hamiltonian(0.5)
            record = propagate_stationary(h, metric_rho(model.metric0(0.5), h, rho), psi0, 100.0, 200)
            worst = max(worst, record.drift)
    return worst


def _dirac_drift():
    psi0 = np.array([1.0, 0.0], dtype=complex)
    return propagate_stationary(h2(0.5), theta0_2(0.5), psi0, 50.0, 200).dirac_drift


def verification_checks(config):
    """Named (value, threshold, relation) checks; the relation is how value must compare to threshold."""
    hermitization = {}

    def hermitization_part(index):
        if not hermitization:
            hermitization['values'] = _hermitization()
        return hermitization['values'][index]

    return [
        ('energy_spectrum_two', lambda: _energy_error('two'), 1e-10, '<='),
        ('energy_spectrum_four', lambda: _energy_error('four'), 1e-10, '<='),
        ('metric_spectrum_oracle', _metric_oracle_error, 1e-9, '<='),
        ('quasi_hermiticity', lambda: _quasi_hermiticity(config.inject_identity), 1e-10, '<='),
        ('product_spectral_equivalence', _product_spectral, 1e-10, '<='),
        ('hermitization_asymmetry', lambda: hermitization_part(0), 1e-9, '<='),
        ('hermitization_isospectrality', lambda: hermitization_part(1), 1e-9, '<='),
        ('cardano_t2', lambda: abs(cardano_t2() - 2.875129794), 1e-8, '<='),
        ('cardano_radicand', lambda: abs(radicand(2, cardano_t2())), 1e-7, '<='),
        ('t4_value', lambda: abs(t4_numeric() - 4.150651137), 1e-8, '<='),
        ('boundaries', _boundary_error, 1e-8, '<='),
        ('ep_condition_two', lambda: eig_general(get_model('two').hamiltonian(1e-6)).condition, 1e5, '>='),
        ('ep_condition_four', lambda: eig_general(get_model('four').hamiltonian(1e-6)).condition, 1e5, '>='),
        ('ep_metric_rank_two', lambda: abs(numeric_rank(theta0_2(0.0)) - 1), 0.0, '<='),
        ('ep_metric_rank_four', lambda: abs(numeric_rank(theta0_4(0.0)) - 1), 0.0, '<='),
        ('ep_nilpotency', lambda: float(np.abs(np.linalg.matrix_power(h2(0.0) - 2 * np.eye(2), 2)).max()), 0.0, '<='),
        ('fig2_supremum', lambda: abs(float(eig_hermitian(theta0_4(1e-3)).eigenvalues[-1].real) - 8.0), 1e-4, '<='),
        ('stationary_theta_norm', _stationary_drift, 1e-8, '<='),
        ('dirac_norm_violation', _dirac_drift, 1e-3, '>='),
        ('nonstationary_theta_norm',
         lambda: propagate_nonstationary('two', 0, 0.3, 0.8, 2000, fd_step=config.fd_step).drift, 1e-6, '<='),
    ]


def cmd_verify(config):
    checks = []
    for name, compute, threshold, relation in verification_checks(config):
        if config.tol is not None and relation == '<=':
            threshold = config.tol
        try:
            checks.append(Check(name, float(compute()), threshold, relation))
        except (QHMetricError, ValueError, np.linalg.LinAlgError) as e:
            current_app.logger.error(f"Verification check {name} failed: {e}")
            checks.append(Check(name, float('nan'), threshold, relation, error=str(e)))
    passed = all(c.passed for c in checks)
    current_app.logger.info(f"Verification: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return {'passed': passed, 'checks': [c.to_dict() for c in checks]}


# -- rendering ------------------------------------------------------------------

def jsonable(value):
    """Plain JSON types; complex numbers become [re, im]."""
    if hasattr(value, 'to_dict'):
        return jsonable(value.to_dict())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(float(value.real)), jsonable(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        # NaN and infinities have no JSON spelling
        return float(value) if np.isfinite(value) else None
    return value


def _record_summary(record):
    return {
        'samples': len(record.samples),
        'drift': record.drift,
        'dirac_drift': record.dirac_drift,
        'final_physical_norm': float(record.physical_norms[-1]),
    }


def _split_complex(row):
    cells = []
    for value in row:
        cells += [value.real, value.imag] if isinstance(value, complex) else [value]
    return cells


def build_report(config, result):
    command = config.command
    if command == 'spectrum':
        columns, rows = result
        document = {'model': config.model, 'columns': columns, 'rows': rows}
    elif command == 'scan':
        columns = []
        for name in result.columns:
            columns += [name, f"{name}_im"] if '_theta' in name else [name]
        rows = [_split_complex(row) for row in result.rows]
        document = {
            'figure': result.figure,
            'columns': result.columns,
            'rows': result.rows,
            'rescale': result.rescale,
            'regimes': result.regimes,
        }
    elif command == 'boundary':
        columns = ['rho', 't_rho', 'transition']
        rows = [[rho, entry['t_rho'], entry['transition']] for rho, entry in result.items()]
        document = {'model': config.model, 'rho': result}
    elif command == 'ep':
        document = result.to_dict()
        columns = ['t_ep', 'eigvec_condition', 'min_gap', 'metric_rank', 'is_ep']
        rows = [[document[c] for c in columns]]
    elif command == 'evolve':
        summaries = {rho: _record_summary(record) for rho, record in result.items()}
        columns = ['rho', 'drift', 'dirac_drift', 'final_physical_norm']
        rows = [[rho] + [s[c] for c in columns[1:]] for rho, s in summaries.items()]
        document = {'model': config.model, 'mode': config.mode, 'rho': summaries}
    elif command == 'verify':
        columns = ['name', 'value', 'threshold', 'relation', 'passed']
        rows = [[c[k] for k in columns] for c in result['checks']]
        document = result
    else:
        raise ValueError(f"unknown command {command!r}")
    return Report(command=command, columns=columns, rows=rows, document=jsonable(document))


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def render_csv(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def render_json(report):
    return json.dumps(report.document, sort_keys=True, indent=2, allow_nan=False) + '\n'


def render(report, output_format):
    return render_json(report) if output_format == 'json' else render_csv(report)


COMMANDS = {
    'spectrum': cmd_spectrum,
    'scan': cmd_metric_scan,
    'boundary': cmd_boundary,
    'ep': cmd_ep,
    'evolve': cmd_evolve,
    'verify': cmd_verify,
}


def run_command(config):
    """Run one command.

    Returns (success, payload): payload is a Report on success, the error
    message otherwise.
    """
    try:
        result = COMMANDS[config.command](config)
        return True, build_report(config, result)
    except (QHMetricError, ValueError, np.linalg.LinAlgError) as e:
        current_app.logger.error(f"{config.command} failed: {e}")
        return False, str(e)
