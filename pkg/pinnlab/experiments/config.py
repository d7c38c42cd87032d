"""
Run configuration.

A run is described by an INI file with the sections [problem], [network],
[sampling], [training], [evaluation] and [output]. Values are layered:

    problem defaults -> profile overlay -> file -> command-line flags

Every key may be omitted; an empty file with ``problem=nws`` gives the
published NWS setup. ``dump_config`` writes every key back out, so a dumped
file reloads to an equal RunConfig whatever profile it is read with.
"""
import configparser
import copy
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from core.exceptions import ConfigurationError
from networks.mlp import INPUT_WIDTH, OUTPUT_WIDTH
from problems.equations import get_problem
from sampling.points import make_grid
from training.trainer import TrainConfig

from .serializers import SECTION_SERIALIZERS, format_counts, format_schedule, validate_section

logger = logging.getLogger(__name__)

SECTIONS = tuple(SECTION_SERIALIZERS)

_NWS_DEFAULTS = {
    'problem': {'name': 'nws', 'lam': 0.1},
    'network': {'hidden_layers': 8, 'width': 20, 'activation': 'gelu'},
    'sampling': {'n0': 250, 'nb': 250, 'nc': 10000, 'seed': 0},
    'training': {
        'iterations': 20000,
        'schedule': '0:1e-2, 1000:1e-3, 3000:5e-4',
        'alpha': 1.0, 'beta': 1.0, 'gamma': 1.0,
        'beta1': 0.9, 'beta2': 0.999, 'epsilon': 1e-8,
        'optimizer': 'adam',
        'log_every': 1000,
    },
    'evaluation': {
        'h': 0.004, 'dt': 0.004,
        'max_error': 1e-4,
        'gate': 'grid',
        'benchmark_counts': '1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000',
        'benchmark_repeats': 3,
        'min_r_squared': 0.98,
        'surface_h': None, 'surface_dt': None, 'surface_t_max': None,
    },
    'output': {'directory': ''},
}

_ALLEN_CAHN_DEFAULTS = copy.deepcopy(_NWS_DEFAULTS)
_ALLEN_CAHN_DEFAULTS['problem']['name'] = 'allen-cahn'
_ALLEN_CAHN_DEFAULTS['network']['width'] = 40
_ALLEN_CAHN_DEFAULTS['sampling'].update(n0=500, nb=500)
# errors are gated on the published comparison grid (t <= 0.01, h = 0.1)
_ALLEN_CAHN_DEFAULTS['evaluation'].update(h=0.001, dt=0.1, max_error=5e-5, gate='table')
# early-time error surface, t <= 0.01 at h = 0.1, dt = 0.001
_ALLEN_CAHN_DEFAULTS['evaluation'].update(surface_h=0.1, surface_dt=0.001, surface_t_max=0.01)

PROBLEM_DEFAULTS = {
    'nws': _NWS_DEFAULTS,
    'allen-cahn': _ALLEN_CAHN_DEFAULTS,
}

PROFILES = {
    'paper': {},
    'ci': {
        'network': {'width': 20},
        'sampling': {'nc': 2000},
        'training': {'iterations': 4000, 'schedule': '0:1e-2, 400:1e-3, 1200:5e-4', 'log_every': 200},
        'evaluation': {'max_error': 2e-3, 'gate': 'grid'},
    },
}


@dataclass(frozen=True)
class ProblemConfig:
    name: str
    lam: float

    def build(self):
        return get_problem(self.name, self.lam)


@dataclass(frozen=True)
class NetworkConfig:
    hidden_layers: int
    width: int
    activation: str

    @property
    def layer_sizes(self):
        return [INPUT_WIDTH] + [self.width] * self.hidden_layers + [OUTPUT_WIDTH]


@dataclass(frozen=True)
class SamplingConfig:
    n0: int
    nb: int
    nc: int
    seed: int


@dataclass(frozen=True)
class EvaluationConfig:
    h: float
    dt: float
    max_error: float
    gate: str
    benchmark_counts: tuple
    benchmark_repeats: int
    min_r_squared: float
    surface_h: float = None
    surface_dt: float = None
    surface_t_max: float = None

    def surface_grid(self, pde):
        """Extra error-surface grid, or None when no surface is configured."""
        if self.surface_h is None:
            return None
        return make_grid(self.surface_h, self.surface_dt, pde, t_max=self.surface_t_max)


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    network: NetworkConfig
    sampling: SamplingConfig
    training: TrainConfig
    evaluation: EvaluationConfig
    output_dir: str
    profile: str = field(default='paper', compare=False)

    @property
    def seed(self):
        return self.sampling.seed

    @property
    def output_path(self):
        return Path(self.output_dir)

    def pde(self):
        return self.problem.build()


def _default_directory(name):
    return str(Path(settings.PINN_OUTPUT_DIR) / name)


def _read_file_values(text, source):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"{source}: {e}") from e
    if parser.defaults():
        raise ConfigurationError(f"{source}: [DEFAULT] is not supported, put each key in its section")
    unknown = [section for section in parser.sections() if section not in SECTIONS]
    if unknown:
        raise ConfigurationError(
            f"{source}: unknown section [{unknown[0]}]; expected one of {', '.join(SECTIONS)}")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def parse_config(text='', problem=None, profile='paper', seed=None, out=None, source='<string>'):
    """RunConfig from INI text plus command-line overrides."""
    if profile not in PROFILES:
        raise ConfigurationError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")
    file_values = _read_file_values(text, source)

    name = problem or file_values.get('problem', {}).get('name', 'nws')
    if name not in PROBLEM_DEFAULTS:
        raise ConfigurationError(
            f"[problem] name: {name!r} is not one of {', '.join(PROBLEM_DEFAULTS)}")

    flags = {}
    if problem is not None:
        flags['problem'] = {'name': problem}
    if seed is not None:
        flags['sampling'] = {'seed': seed}
    if out is not None:
        flags['output'] = {'directory': str(out)}

    raw = copy.deepcopy(PROBLEM_DEFAULTS[name])
    for overlay in (PROFILES[profile], file_values, flags):
        for section, values in overlay.items():
            raw[section].update(values)

    values = {section: validate_section(section, raw[section]) for section in SECTIONS}
    sampling = SamplingConfig(**values['sampling'])
    config = RunConfig(
        problem=ProblemConfig(**values['problem']),
        network=NetworkConfig(**values['network']),
        sampling=sampling,
        training=TrainConfig(seed=sampling.seed, **values['training']),
        evaluation=EvaluationConfig(**values['evaluation']),
        output_dir=values['output']['directory'] or _default_directory(name),
        profile=profile,
    )
    logger.debug(f"Loaded {profile} configuration for {name} from {source}")
    return config


def load_config(path=None, problem=None, profile='paper', seed=None, out=None):
    """RunConfig from a config file (or the defaults alone when ``path`` is None)."""
    if path is None:
        return parse_config('', problem, profile, seed, out, source='<defaults>')
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    return parse_config(text, problem, profile, seed, out, source=str(path))


def config_sections(config):
    """Every key of ``config`` as native values, section by section."""
    training = config.training
    return {
        'problem': {'name': config.problem.name, 'lam': config.problem.lam},
        'network': {
            'hidden_layers': config.network.hidden_layers,
            'width': config.network.width,
            'activation': config.network.activation,
        },
        'sampling': {
            'n0': config.sampling.n0,
            'nb': config.sampling.nb,
            'nc': config.sampling.nc,
            'seed': config.sampling.seed,
        },
        'training': {
            'iterations': training.iterations,
            'schedule': [list(pair) for pair in training.schedule],
            'alpha': training.alpha, 'beta': training.beta, 'gamma': training.gamma,
            'beta1': training.beta1, 'beta2': training.beta2, 'epsilon': training.epsilon,
            'optimizer': training.optimizer,
            'log_every': training.log_every,
        },
        'evaluation': {
            'h': config.evaluation.h,
            'dt': config.evaluation.dt,
            'max_error': config.evaluation.max_error,
            'gate': config.evaluation.gate,
            'benchmark_counts': list(config.evaluation.benchmark_counts),
            'benchmark_repeats': config.evaluation.benchmark_repeats,
            'min_r_squared': config.evaluation.min_r_squared,
            'surface_h': config.evaluation.surface_h,
            'surface_dt': config.evaluation.surface_dt,
            'surface_t_max': config.evaluation.surface_t_max,
        },
        'output': {'directory': config.output_dir},
    }


def _ini_value(key, value):
    if value is None:
        return ''
    if key == 'schedule':
        return format_schedule(value)
    if key == 'benchmark_counts':
        return format_counts(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config):
    parser = configparser.ConfigParser(interpolation=None)
    for section, values in config_sections(config).items():
        parser[section] = {key: _ini_value(key, value) for key, value in values.items()}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()
