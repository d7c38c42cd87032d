"""
Published reference errors and timings.

The fixture is a verbatim transcription; its SHA-256 is pinned so an edit to
any digit is caught.
"""
import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from core.exceptions import ConfigurationError

BASELINES_PATH = Path(__file__).resolve().parent / 'data' / 'baselines.json'
BASELINES_SHA256 = '7e70625be7a5081b8324be63d5f9ade575b4b40445a34598c796fb1c41b1596f'

PUBLISHED_PINN = 'PINN (published)'


@dataclass(frozen=True, eq=False)
class BaselineTable:
    problem: str
    method: str
    x: np.ndarray
    t: np.ndarray
    errors: np.ndarray  # (len(x), len(t))

    def value_at(self, x, t):
        i = int(np.flatnonzero(np.isclose(self.x, x))[0])
        j = int(np.flatnonzero(np.isclose(self.t, t))[0])
        return float(self.errors[i, j])


def fixture_digest(path=BASELINES_PATH):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@lru_cache(maxsize=1)
def load_baselines():
    digest = fixture_digest()
    if digest != BASELINES_SHA256:
        raise ConfigurationError(f"baseline fixture {BASELINES_PATH} does not match its checksum ({digest})")
    return json.loads(BASELINES_PATH.read_text())


def baseline_tables(problem):
    """Every published error table for ``problem``, spline methods first."""
    data = load_baselines()
    if problem not in data or problem == 'timing':
        raise ConfigurationError(f"no published tables for problem {problem!r}")
    section = data[problem]
    x = np.array(section['x'], dtype=np.float64)
    t = np.array(section['t'], dtype=np.float64)
    return [
        BaselineTable(problem, method, x, t, np.array(values, dtype=np.float64))
        for method, values in section['methods'].items()
    ]


def published_timing(problem):
    timing = load_baselines()['timing']
    if problem not in timing:
        raise ConfigurationError(f"no published timings for problem {problem!r}")
    return (np.array(timing[problem]['counts'], dtype=np.int64),
            np.array(timing[problem]['seconds'], dtype=np.float64))
