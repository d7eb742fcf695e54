from flask import Flask, jsonify

from config import config


def create_app(config_name='default'):
    """Create and configure the Flask application."""
    app = Flask(__name__)
    app.config.from_object(config[config_name])

    # Output format sanitization
    output_format = app.config.get('QHMETRIC_FORMAT', 'csv')
    if output_format not in ('csv', 'json'):
        app.logger.warning(f"Unsupported QHMETRIC_FORMAT {output_format!r}; falling back to csv")
        app.config['QHMETRIC_FORMAT'] = 'csv'
    if app.config.get('QHMETRIC_THREADS', 1) < 1:
        app.logger.warning(f"QHMETRIC_THREADS={app.config['QHMETRIC_THREADS']} is invalid; using 1")
        app.config['QHMETRIC_THREADS'] = 1

    # Register blueprints
    from app.commands import commands_bp
    from app.routes.api import api_bp

    app.register_blueprint(commands_bp)
    app.register_blueprint(api_bp)

    app.logger.info(
        f"Metric toolkit configured (tol={app.config['QHMETRIC_TOL']}, "
        f"classify_tol={app.config['QHMETRIC_CLASSIFY_TOL']}, threads={app.config['QHMETRIC_THREADS']})"
    )

    @app.route('/')
    def home():
        """List the registered models and the JSON endpoints."""
        from app.toy_models import MODELS
        return jsonify(models=sorted(MODELS), endpoints=['/api/spectrum', '/api/boundary', '/api/ep'])

    return app
