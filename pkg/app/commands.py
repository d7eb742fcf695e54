"""Command-line surface: `flask spectrum|scan|boundary|ep|evolve|verify`.

Exit status 0 on success, 1 on a numerical failure (or a failed
verification), 2 on an invalid configuration. Errors are one line on stderr.
"""
import click
from flask import Blueprint, current_app
from werkzeug.datastructures import MultiDict

from app.forms import RunConfigForm, config_defaults
from app.reporting import render, run_command

commands_bp = Blueprint('commands', __name__, cli_group=None)


class ConfigError(click.ClickException):
    exit_code = 2

    def show(self, file=None):
        click.echo(f"error: config: {self.message}", err=True)


class RuntimeFailure(click.ClickException):
    exit_code = 1

    def show(self, file=None):
        click.echo(f"error: runtime: {self.message}", err=True)


_OPTIONS = [
    click.option('--model', help='Registered model id (two, four, ...).'),
    click.option('--rho', help='Comma-separated metric exponents, e.g. 0,1,2.'),
    click.option('--t-min'),
    click.option('--t-max'),
    click.option('--t-step'),
    click.option('--tol', help='Residual tolerance; for verify it replaces every residual threshold.'),
    click.option('--classify-tol'),
    click.option('--tol-t', help='Bisection width for regime boundaries.'),
    click.option('--kappa', help='Comma-separated positive weights overriding the calibrated metric.'),
    click.option('--figure', help='Figure preset: 1, 2 or 3.'),
    click.option('--format', 'output_format', help='csv or json.'),
    click.option('--out', help='Write to this path instead of stdout.'),
    click.option('--threads'),
    click.option('--grid-points'),
    click.option('--ep-exclusion'),
    click.option('--ep-tol'),
    click.option('--fd-step'),
    click.option('--t-center'),
    click.option('--radius'),
    click.option('--t', 't_point', help='Parameter value for stationary evolution.'),
    click.option('--horizon'),
    click.option('--steps'),
    click.option('--mode', help='stationary or nonstationary.'),
    click.option('--inject-identity', is_flag=True, default=None, help='Verify with Theta = I for the two-level model.'),
]


def run_options(f):
    for option in reversed(_OPTIONS):
        f = option(f)
    return f


def _execute(command, options):
    formdata = MultiDict({k: 'true' if v is True else str(v) for k, v in options.items() if v not in (None, False)})
    form = RunConfigForm(formdata, command=command, **config_defaults(current_app.config))
    if not form.validate():
        raise ConfigError(form.error_line())
    run_config = form.to_run_config()

    success, payload = run_command(run_config)
    if not success:
        raise RuntimeFailure(payload)
    text = render(payload, run_config.output_format)
    if run_config.out:
        with open(run_config.out, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
        current_app.logger.info(f"Wrote {command} output to {run_config.out}")
    else:
        click.echo(text, nl=False)
    return payload


@commands_bp.cli.command('spectrum')
@run_options
def spectrum(**options):
    """Energies of H(t): columns t, E1..EN."""
    _execute('spectrum', options)


@commands_bp.cli.command('scan')
@run_options
def scan(**options):
    """Metric eigenvalue traces (figure presets or model/rho)."""
    _execute('scan', options)


@commands_bp.cli.command('boundary')
@run_options
def boundary(**options):
    """Unitarity boundaries t_rho."""
    _execute('boundary', options)


@commands_bp.cli.command('ep')
@run_options
def ep(**options):
    """Probe for an exceptional point of H."""
    _execute('ep', options)


@commands_bp.cli.command('evolve')
@run_options
def evolve(**options):
    """Stationary or non-stationary propagation with norm tracking."""
    _execute('evolve', options)


@commands_bp.cli.command('verify')
@run_options
def verify(**options):
    """Run the invariant checks; exit status 1 if any fails."""
    report = _execute('verify', options)
    if not report.document['passed']:
        failed = [c['name'] for c in report.document['checks'] if not c['passed']]
        current_app.logger.warning(f"Verification failed: {', '.join(failed)}")
        click.get_current_context().exit(1)
