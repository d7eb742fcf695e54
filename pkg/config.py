import os
from dotenv import load_dotenv

load_dotenv()


def _float(name, default):
    return float(os.environ.get(name, default))


def _int(name, default):
    return int(os.environ.get(name, default))


class Config:
    """Base configuration.

    Every numerical default can be overridden from the environment (or a .env
    file). Command-line flags and query arguments override these in turn:
        QHMETRIC_TOL            residual tolerance
        QHMETRIC_CLASSIFY_TOL   regime classification tolerance
        QHMETRIC_TOL_T          bisection width for regime boundaries
        QHMETRIC_THREADS        worker threads for grid scans
    """

    QHMETRIC_THREADS = _int('QHMETRIC_THREADS', 1)
    QHMETRIC_TOL = _float('QHMETRIC_TOL', 1e-10)
    QHMETRIC_CLASSIFY_TOL = _float('QHMETRIC_CLASSIFY_TOL', 1e-8)
    QHMETRIC_TOL_T = _float('QHMETRIC_TOL_T', 1e-10)
    QHMETRIC_GRID_POINTS = _int('QHMETRIC_GRID_POINTS', 400)
    QHMETRIC_EP_EXCLUSION = _float('QHMETRIC_EP_EXCLUSION', 1e-4)
    QHMETRIC_EP_TOL = _float('QHMETRIC_EP_TOL', 1e-2)
    QHMETRIC_FD_STEP = _float('QHMETRIC_FD_STEP', 1e-5)
    # Only csv or json; anything else falls back to csv
    QHMETRIC_FORMAT = os.environ.get('QHMETRIC_FORMAT', 'csv').strip().lower()
    QHMETRIC_T_MIN = _float('QHMETRIC_T_MIN', 0.0)
    QHMETRIC_T_MAX = _float('QHMETRIC_T_MAX', 5.0)
    QHMETRIC_T_STEP = _float('QHMETRIC_T_STEP', 0.05)


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    # Tests pin the defaults regardless of the caller's environment
    QHMETRIC_THREADS = 1
    QHMETRIC_TOL = 1e-10
    QHMETRIC_CLASSIFY_TOL = 1e-8
    QHMETRIC_TOL_T = 1e-10
    QHMETRIC_GRID_POINTS = 400
    QHMETRIC_EP_EXCLUSION = 1e-4
    QHMETRIC_EP_TOL = 1e-2
    QHMETRIC_FD_STEP = 1e-5
    QHMETRIC_FORMAT = 'csv'
    QHMETRIC_T_MIN = 0.0
    QHMETRIC_T_MAX = 5.0
    QHMETRIC_T_STEP = 0.05


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False
    TESTING = False


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}
