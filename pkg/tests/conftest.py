import os, sys
from pathlib import Path
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from app import create_app

# Full-range scans and the verification suite take a few seconds each
SKIP_SLOW = os.environ.get('QHMETRIC_SKIP_SLOW', 'false').lower() in ('1','true','yes','on')


# pytest-flask builds `client`, `config` and the request context from this fixture
@pytest.fixture
def app():
    app = create_app('testing')
    with app.app_context():
        yield app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-range scans and the verification suite; skip with QHMETRIC_SKIP_SLOW=true")
    config.addinivalue_line("markers", "cli: tests driving the flask command-line surface")

def pytest_collection_modifyitems(config, items):
    if not SKIP_SLOW:
        return
    skip_slow = pytest.mark.skip(reason="slow tests disabled (QHMETRIC_SKIP_SLOW=true)")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)
