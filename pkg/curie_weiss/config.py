"""
Experiment configuration files.

A configuration is a flat key-value text file with sections::

    [model]
    beta = 0.5, 1.5
    n_pop = 200, 200
    k_obs = 100, 100

    [estimators]
    use = gamma, zeta

    [intervals]
    b1 = 0.8
    b2 = 1.2

    [experiment]
    kind = consistency
    n_obs = 100, 1000, 10000
    replications = 50
    seed = 20240917

    [output]
    dir = reports/consistency
    format = both

Lines starting with ``#`` or ``;`` are comments. Every schema error is reported
with the line it was found on.
"""
import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from curie_weiss.conf import get_setting
from curie_weiss.core import ModelSpec
from curie_weiss.estimators import IntervalConstants, Regime
from curie_weiss.exceptions import ConfigError, CurieWeissError

logger = logging.getLogger('curie_weiss.config')

ESTIMATORS = ('gamma', 'zeta', 'gamma2', 'ml_oracle')
OUTPUT_FORMATS = ('csv', 'json', 'both')


class ExperimentKind(Enum):
    CONSISTENCY = 'consistency'
    CLT = 'clt'
    COVERAGE = 'coverage'
    EQUIVALENCE = 'equivalence'
    APPROX_ERROR = 'approx_error'
    ML_COMPARE = 'ml_compare'
    SAMPLE = 'sample'
    ESTIMATE = 'estimate'


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in _items(text))


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in _items(text))


def _items(text: str) -> List[str]:
    items = [item.strip() for item in text.split(',')]
    if not all(items):
        raise ValueError("empty list entry")
    return items


def _choice(options: Tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _names(text: str) -> Tuple[str, ...]:
    names = tuple(_items(text))
    for name in names:
        _choice(ESTIMATORS)(name)
    return names


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


# section -> key -> parser
SCHEMA: Dict[str, Dict[str, Callable[[str], object]]] = {
    'model': {'beta': _floats, 'n_pop': _ints, 'k_obs': _ints},
    'estimators': {'use': _names, 'alpha': float},
    'intervals': {
        'b1': float, 'b2': float,
        'c_high': float, 'c_low': float, 'd_high': float, 'd_low': float,
    },
    'experiment': {
        'kind': _choice(tuple(kind.value for kind in ExperimentKind)),
        'n_obs': _ints,
        'replications': int,
        'seed': _seed,
        'threads': int,
        'level': float,
        'n_pop_grid': _ints,
        'k_fraction': float,
        'moment_orders': _ints,
        'equivalence_regime': _choice((Regime.HIGH.value, Regime.LOW.value)),
        'equivalence_b': float,
        'ml_bracket': _floats,
        'strict': lambda text: _choice(('true', 'false'))(text.lower()) == 'true',
    },
    'output': {'dir': str, 'format': _choice(OUTPUT_FORMATS)},
}
REQUIRED = {
    'model': ('beta', 'n_pop', 'k_obs'),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment configuration."""

    kind: ExperimentKind
    model: ModelSpec
    estimators: Tuple[str, ...] = ('gamma', 'zeta')
    alpha: Optional[float] = None
    b1: float = 0.8
    b2: float = 1.2
    constants: Optional[IntervalConstants] = None
    n_obs: Tuple[int, ...] = (1000,)
    replications: int = 10
    seed: int = 0
    threads: int = 1
    level: float = 0.95
    n_pop_grid: Tuple[int, ...] = (50, 100, 200, 400, 800, 1600, 3200)
    k_fraction: float = 0.5
    moment_orders: Tuple[int, ...] = (1, 2, 3)
    equivalence_regime: Regime = Regime.HIGH
    equivalence_b: float = 1.0
    ml_bracket: Tuple[float, float] = (-5.0, 10.0)
    strict: bool = False
    output_dir: Path = Path('reports')
    output_format: str = 'both'

    def __post_init__(self):
        if self.constants is None:
            object.__setattr__(self, 'constants', IntervalConstants.from_settings())
        if not self.n_obs or min(self.n_obs) < 1:
            raise ConfigError(f"n_obs grid must hold positive sizes, got {self.n_obs}")
        if not self.n_pop_grid or min(self.n_pop_grid) < 2:
            raise ConfigError(f"n_pop_grid must hold sizes >= 2, got {self.n_pop_grid}")
        if self.replications < 1:
            raise ConfigError(f"replications must be at least 1, got {self.replications}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"level must lie in (0, 1), got {self.level}")
        if not 0.0 < self.k_fraction <= 1.0:
            raise ConfigError(f"k_fraction must lie in (0, 1], got {self.k_fraction}")
        if len(self.ml_bracket) != 2 or not self.ml_bracket[0] < self.ml_bracket[1]:
            raise ConfigError(f"ml_bracket must be an increasing pair, got {self.ml_bracket}")
        if not self.estimators:
            raise ConfigError("At least one estimator is required")

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Optional[Union[str, Path]] = None,
        threads: Optional[int] = None,
        output_format: Optional[str] = None,
    ) -> 'ExperimentConfig':
        """Apply command-line flags on top of the file values."""
        changes = {}
        if seed is not None:
            changes['seed'] = seed
        if output_dir is not None:
            changes['output_dir'] = Path(output_dir)
        if threads is not None:
            changes['threads'] = threads
        if output_format is not None:
            changes['output_format'] = output_format
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        """JSON-ready form embedded into every report; the thread count is left out."""
        return {
            'kind': self.kind.value,
            'model': [asdict(group) for group in self.model],
            'estimators': list(self.estimators),
            'alpha': self.alpha,
            'b1': self.b1,
            'b2': self.b2,
            'constants': asdict(self.constants),
            'n_obs': list(self.n_obs),
            'replications': self.replications,
            'seed': self.seed,
            'level': self.level,
            'n_pop_grid': list(self.n_pop_grid),
            'k_fraction': self.k_fraction,
            'moment_orders': list(self.moment_orders),
            'equivalence_regime': self.equivalence_regime.value,
            'equivalence_b': self.equivalence_b,
            'ml_bracket': list(self.ml_bracket),
            'strict': self.strict,
            'output_format': self.output_format,
            'rng': get_setting('RNG_ALGORITHM'),
        }


def _read_sections(text: str) -> Dict[str, Dict[str, Tuple[str, int]]]:
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in '#;':
            continue
        if line.startswith('['):
            if not line.endswith(']'):
                raise ConfigError(f"Malformed section header {line!r}", number)
            current = line[1:-1].strip()
            if current not in SCHEMA:
                raise ConfigError(f"Unknown section [{current}]", number)
            if current in sections:
                raise ConfigError(f"Section [{current}] appears twice", number)
            sections[current] = {}
            continue
        if current is None:
            raise ConfigError("Key outside of any section", number)
        key, sep, value = line.partition('=')
        if not sep:
            raise ConfigError(f"Expected 'key = value', got {line!r}", number)
        key, value = key.strip(), value.strip()
        if key not in SCHEMA[current]:
            raise ConfigError(f"Unknown key {key!r} in [{current}]", number)
        if key in sections[current]:
            raise ConfigError(f"Duplicate key {key!r} in [{current}]", number)
        sections[current][key] = (value, number)
    return sections


def parse_config(text: str, kind: Optional[ExperimentKind] = None) -> ExperimentConfig:
    """
    Parse and validate a configuration; kind (set by the invoking command)
    takes precedence over the file's own kind key.
    """
    sections = _read_sections(text)
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in sections.get(section, {}):
                raise ConfigError(f"Missing required key {key!r} in [{section}]")

    values: Dict[str, Dict[str, object]] = {}
    for section, entries in sections.items():
        values[section] = {}
        for key, (raw, number) in entries.items():
            try:
                values[section][key] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"Invalid value {raw!r} for {key}: {exc}", number) from exc

    model_lines = sections['model']
    try:
        model = ModelSpec.from_lists(
            values['model']['beta'], values['model']['n_pop'], values['model']['k_obs']
        )
    except CurieWeissError as exc:
        raise ConfigError(str(exc), model_lines['beta'][1]) from exc

    experiment = dict(values.get('experiment', {}))
    file_kind = experiment.pop('kind', None)
    if kind is None:
        if file_kind is None:
            raise ConfigError("Missing required key 'kind' in [experiment]")
        kind = ExperimentKind(file_kind)
    elif file_kind is not None and file_kind != kind.value:
        logger.warning(f"Configuration kind '{file_kind}' overridden by '{kind.value}'")
    options: Dict[str, object] = {'kind': kind, 'model': model}
    estimators = values.get('estimators', {})
    if 'use' in estimators:
        options['estimators'] = estimators['use']
    if 'alpha' in estimators:
        options['alpha'] = estimators['alpha']

    intervals = values.get('intervals', {})
    options['b1'] = intervals.get('b1', get_setting('B1'))
    options['b2'] = intervals.get('b2', get_setting('B2'))
    constant_names = ('c_high', 'c_low', 'd_high', 'd_low')
    if any(name in intervals for name in constant_names):
        defaults = get_setting('INTERVAL_CONSTANTS')
        options['constants'] = IntervalConstants(
            **{name: intervals.get(name, defaults[name]) for name in constant_names}
        )

    if 'equivalence_regime' in experiment:
        experiment['equivalence_regime'] = Regime(experiment['equivalence_regime'])
    experiment.setdefault('seed', get_setting('DEFAULT_SEED'))
    experiment.setdefault('ml_bracket', tuple(get_setting('ML_BRACKET')))
    options.update(experiment)

    output = values.get('output', {})
    if 'dir' in output:
        options['output_dir'] = Path(output['dir'])
    if 'format' in output:
        options['output_format'] = output['format']

    config = ExperimentConfig(**options)
    logger.debug(f"Parsed experiment configuration: {config.to_dict()}")
    return config


def load_config(path: Union[str, Path], kind: Optional[ExperimentKind] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    return parse_config(text, kind)
