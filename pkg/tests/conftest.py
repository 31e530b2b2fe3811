import os
import subprocess
import sys
from pathlib import Path
from typing import List, Optional

import pytest

from gsr_dist.core.config import get_settings
from gsr_dist.schemas.params import ModelParams
from gsr_dist.spectrum import build_spectrum

PROJECT_ROOT = Path(__file__).parent.parent

# Small truncations keep the unit suite fast; acceptance runs use the full 500.
UNIT_MODES = 40


class CliResult:
    def __init__(self, completed: subprocess.CompletedProcess):
        self.exit_code = completed.returncode
        self.stdout = completed.stdout
        self.stderr = completed.stderr


class CliRunner:
    """Runs ``python -m gsr_dist`` in a subprocess with the test environment"""

    def __init__(self, extra_env: Optional[dict] = None):
        self.env = os.environ.copy()
        self.env["GSR_DIST_ENVIRONMENT"] = "test"
        src = str(PROJECT_ROOT / "src")
        self.env["PYTHONPATH"] = os.pathsep.join(filter(None, [src, self.env.get("PYTHONPATH")]))
        if extra_env:
            self.env.update(extra_env)

    def invoke(self, args: List[str], timeout: float = 600, cwd: Optional[Path] = None) -> CliResult:
        completed = subprocess.run(
            [sys.executable, "-m", "gsr_dist", *args],
            cwd=cwd or PROJECT_ROOT,
            env=self.env,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
        return CliResult(completed)


@pytest.fixture
def cli() -> CliRunner:
    return CliRunner()


@pytest.fixture(autouse=True)
def clear_settings_cache():
    """Settings are cached per process; tests that patch the environment need a fresh read"""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def pre_params() -> ModelParams:
    return ModelParams(mu=0.5, a_threshold=100.0, theta=0)


@pytest.fixture(scope="session")
def post_params() -> ModelParams:
    return ModelParams(mu=1.5, a_threshold=100.0, theta=1)


@pytest.fixture(scope="session")
def pre_spectrum(pre_params):
    return build_spectrum(pre_params, UNIT_MODES)


@pytest.fixture(scope="session")
def post_spectrum(post_params):
    return build_spectrum(post_params, UNIT_MODES)


@pytest.fixture(scope="session")
def pre_spectrum_full(pre_params):
    return build_spectrum(pre_params, 500)


@pytest.fixture(scope="session")
def post_spectrum_full(post_params):
    return build_spectrum(post_params, 500)
