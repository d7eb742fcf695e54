from flask import Blueprint, current_app, jsonify, request

from app.forms import RunConfigForm, config_defaults
from app.reporting import run_command

api_bp = Blueprint('api', __name__, url_prefix='/api')


def _run(command):
    form = RunConfigForm(request.args, command=command, **config_defaults(current_app.config))
    if not form.validate():
        current_app.logger.info(f"Rejected /api/{command} request: {form.error_line()}")
        return jsonify({"success": False, "errors": form.errors}), 400
    success, payload = run_command(form.to_run_config())
    if not success:
        return jsonify({"success": False, "message": payload}), 422
    return jsonify({"success": True, "result": payload.document})


@api_bp.route('/spectrum')
def spectrum():
    """Energies of H(t) on the requested grid."""
    return _run('spectrum')


@api_bp.route('/boundary')
def boundary():
    """Unitarity boundaries t_rho per requested rho."""
    return _run('boundary')


@api_bp.route('/ep')
def ep():
    return _run('ep')
