from wtforms import BooleanField, FloatField, Form, IntegerField, SelectField, StringField
from wtforms.validators import NumberRange, Optional, ValidationError

from app.models import RunConfig
from app.reporting import FIGURES
from app.toy_models import MODELS

FIGURE_ALIASES = {'1': 'fig1', '2': 'fig2', '3': 'fig3'}


def _parse_list(text, cast):
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    return [cast(part) for part in str(text).split(',') if part.strip()]


def positive(message='Must be greater than zero.'):
    def _positive(form, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError(message)
    return _positive


class RunConfigForm(Form):
    """Validation of one command invocation.

    Fed with a MultiDict of raw strings (CLI flags or query arguments); the
    configured defaults come in as keyword data.
    """
    model = StringField('Model')
    rho = StringField('Rho')
    t_min = FloatField('t min')
    t_max = FloatField('t max')
    t_step = FloatField('t step', validators=[positive()])
    tol = FloatField('Tolerance', validators=[Optional(), positive()])
    classify_tol = FloatField('Classification tolerance', validators=[positive()])
    tol_t = FloatField('Boundary width', validators=[positive()])
    kappa = StringField('Kappa', validators=[Optional()])
    figure = SelectField('Figure', choices=[('', 'none'), ('fig1', 'fig1'), ('fig2', 'fig2'), ('fig3', 'fig3')])
    output_format = SelectField('Format', choices=[('csv', 'CSV'), ('json', 'JSON')])
    out = StringField('Output path', validators=[Optional()])
    threads = IntegerField('Threads', validators=[NumberRange(min=1)])
    grid_points = IntegerField('Grid points', validators=[NumberRange(min=2)])
    ep_exclusion = FloatField('EP exclusion', validators=[NumberRange(min=0.0)])
    ep_tol = FloatField('EP tolerance', validators=[positive()])
    fd_step = FloatField('Finite-difference step', validators=[positive()])
    t_center = FloatField('EP probe centre')
    radius = FloatField('EP probe radius', validators=[positive()])
    t_point = FloatField('Stationary t')
    horizon = FloatField('Horizon', validators=[positive()])
    steps = IntegerField('Steps', validators=[NumberRange(min=1)])
    mode = SelectField('Mode', choices=[('stationary', 'stationary'), ('nonstationary', 'non-stationary')])
    inject_identity = BooleanField('Inject identity metric')

    def __init__(self, formdata=None, command='spectrum', **kwargs):
        if formdata is not None and formdata.get('figure') in FIGURE_ALIASES:
            formdata = formdata.copy()
            formdata['figure'] = FIGURE_ALIASES[formdata['figure']]
        super().__init__(formdata, **kwargs)
        self.command = command

    def validate_model(self, field):
        if field.data not in MODELS:
            raise ValidationError(f"Unknown model '{field.data}'; choose one of {', '.join(sorted(MODELS))}.")

    def validate_rho(self, field):
        try:
            values = _parse_list(field.data, int)
        except (TypeError, ValueError):
            raise ValidationError('Must be a comma-separated list of integers.')
        if not values:
            raise ValidationError('Must list at least one value.')
        if any(v < 0 for v in values):
            raise ValidationError('Values must be non-negative.')

    def validate_kappa(self, field):
        if not field.data:
            return
        try:
            values = _parse_list(field.data, float)
        except (TypeError, ValueError):
            raise ValidationError('Must be a comma-separated list of numbers.')
        if any(not v > 0 for v in values):
            raise ValidationError('Weights must be positive.')
        # a figure preset fixes the model
        key = FIGURES[self.figure.data].model if self.figure.data in FIGURES else self.model.data
        model = MODELS.get(key)
        if model is not None and len(values) != model.dim:
            raise ValidationError(f"Expected {model.dim} weights for model '{key}'.")

    def validate(self, extra_validators=None):
        valid = super().validate(extra_validators)
        if self.t_min.data is not None and self.t_max.data is not None and not self.t_min.data < self.t_max.data:
            self.t_max.errors = list(self.t_max.errors) + ['Must be greater than t_min.']
            valid = False
        return valid

    def error_line(self):
        """Single-line summary: 'field: message; field: message'."""
        parts = []
        for name, messages in self.errors.items():
            for message in messages:
                parts.append(f"{name}: {message}")
        return '; '.join(parts)

    def to_run_config(self):
        return RunConfig(
            command=self.command,
            model=self.model.data,
            rho=_parse_list(self.rho.data, int),
            t_min=self.t_min.data,
            t_max=self.t_max.data,
            t_step=self.t_step.data,
            tol=self.tol.data,
            classify_tol=self.classify_tol.data,
            tol_t=self.tol_t.data,
            kappa=_parse_list(self.kappa.data, float) if self.kappa.data else None,
            figure=self.figure.data or None,
            output_format=self.output_format.data,
            out=self.out.data or None,
            threads=self.threads.data,
            grid_points=self.grid_points.data,
            ep_exclusion=self.ep_exclusion.data,
            ep_tol=self.ep_tol.data,
            fd_step=self.fd_step.data,
            t_center=self.t_center.data,
            radius=self.radius.data,
            t_point=self.t_point.data,
            horizon=self.horizon.data,
            steps=self.steps.data,
            mode=self.mode.data,
            inject_identity=bool(self.inject_identity.data),
        )


def config_defaults(app_config):
    """Keyword data for RunConfigForm taken from the Flask config."""
    return {
        'model': 'two',
        'rho': '0',
        't_min': app_config['QHMETRIC_T_MIN'],
        't_max': app_config['QHMETRIC_T_MAX'],
        't_step': app_config['QHMETRIC_T_STEP'],
        'tol': None,
        'classify_tol': app_config['QHMETRIC_CLASSIFY_TOL'],
        'tol_t': app_config['QHMETRIC_TOL_T'],
        'figure': '',
        'output_format': app_config['QHMETRIC_FORMAT'],
        'threads': app_config['QHMETRIC_THREADS'],
        'grid_points': app_config['QHMETRIC_GRID_POINTS'],
        'ep_exclusion': app_config['QHMETRIC_EP_EXCLUSION'],
        'ep_tol': app_config['QHMETRIC_EP_TOL'],
        'fd_step': app_config['QHMETRIC_FD_STEP'],
        't_center': 0.0,
        'radius': 0.5,
        't_point': 0.5,
        'horizon': 100.0,
        'steps': 2000,
        'mode': 'stationary',
        'inject_identity': False,
    }
