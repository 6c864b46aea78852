"""Run configuration: a YAML file with nested sections or flat shortcut keys.

Full form (every key optional; values shown are the defaults)::

    network:
      layer_sizes: [784, 256, 10]
      activations: [relu, softmax]
      learning_rate: 0.05
      batch_size: 50
      leaky_slope: 0.01
      weight_init: scaled        # or "standard" for plain N(0, 1)
    parallel:
      children: 1                # 1 = sequential network
      workers: 1
      combiner: average
      child_init: replicate      # or "fresh"
      backend: process           # or "thread"
    data:
      dir: null                  # falls back to $PARNET_DATA_DIR
    run:
      epochs: 20
      seed: 0                    # or "time"
      eval_every: 1
      output_csv: results.csv
      checkpoint_dir: null
    sweep:
      activations: [tanh, leaky_relu, relu, sigmoid]
      activation_children: 10
      children_set: [2, 5, 10, 20, 30]
      children_learning_rate: 0.1
    bench:
      children: 64
      workers_set: [1, 2, 4, 6, 8, 12, 16, 32, 64]
      epochs: 2
      repeats: 3
      subset: null               # train on the first N instances only

Top-level shortcuts: ``lr``, ``learning_rate``, ``batch_size``,
``layer_sizes``, ``activations``, ``leaky_slope``, ``weight_init``,
``children``, ``workers``, ``combiner``, ``child_init``, ``backend``,
``epochs``, ``seed``, ``eval_every``, ``output_csv``, ``checkpoint_dir``,
``data_dir``. Unknown keys are errors.
"""

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .exceptions import ConfigError, ValidationError
from .network import NetworkConfig
from .parallel import BACKENDS, COMBINERS, default_backend

DEFAULT_FILENAME = "config.yaml"
CHILD_INITS = ("replicate", "fresh")


@dataclass
class NetworkSection:
    layer_sizes: list = field(default_factory=lambda: [784, 256, 10])
    activations: list = field(default_factory=lambda: ["relu", "softmax"])
    learning_rate: float = 0.05
    batch_size: int = 50
    leaky_slope: float = 0.01
    weight_init: str = "scaled"


@dataclass
class ParallelSection:
    children: int = 1
    workers: int = 1
    combiner: str = "average"
    child_init: str = "replicate"
    backend: str = field(default_factory=default_backend)


@dataclass
class DataSection:
    dir: object = None


@dataclass
class RunSection:
    epochs: int = 20
    seed: object = 0
    eval_every: int = 1
    output_csv: str = "results.csv"
    checkpoint_dir: object = None


@dataclass
class SweepSection:
    activations: list = field(default_factory=lambda: ["tanh", "leaky_relu", "relu", "sigmoid"])
    activation_children: int = 10
    children_set: list = field(default_factory=lambda: [2, 5, 10, 20, 30])
    children_learning_rate: float = 0.1


@dataclass
class BenchSection:
    children: int = 64
    workers_set: list = field(default_factory=lambda: [1, 2, 4, 6, 8, 12, 16, 32, 64])
    epochs: int = 2
    repeats: int = 3
    subset: object = None


SECTIONS = {
    "network": NetworkSection,
    "parallel": ParallelSection,
    "data": DataSection,
    "run": RunSection,
    "sweep": SweepSection,
    "bench": BenchSection,
}

SHORTCUTS = {
    "lr": ("network", "learning_rate"),
    "learning_rate": ("network", "learning_rate"),
    "batch_size": ("network", "batch_size"),
    "layer_sizes": ("network", "layer_sizes"),
    "activations": ("network", "activations"),
    "leaky_slope": ("network", "leaky_slope"),
    "weight_init": ("network", "weight_init"),
    "children": ("parallel", "children"),
    "workers": ("parallel", "workers"),
    "combiner": ("parallel", "combiner"),
    "child_init": ("parallel", "child_init"),
    "backend": ("parallel", "backend"),
    "epochs": ("run", "epochs"),
    "seed": ("run", "seed"),
    "eval_every": ("run", "eval_every"),
    "output_csv": ("run", "output_csv"),
    "checkpoint_dir": ("run", "checkpoint_dir"),
    "data_dir": ("data", "dir"),
}


@dataclass
class RunConfig:
    network: NetworkSection = field(default_factory=NetworkSection)
    parallel: ParallelSection = field(default_factory=ParallelSection)
    data: DataSection = field(default_factory=DataSection)
    run: RunSection = field(default_factory=RunSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    bench: BenchSection = field(default_factory=BenchSection)
    #: dotted keys set explicitly by the file or the command line
    explicit: frozenset = field(default=frozenset(), compare=False, repr=False)

    @property
    def sequential(self):
        return self.parallel.children == 1

    def network_config(self, **overrides):
        net = self.network
        cfg = NetworkConfig(
            layer_sizes=tuple(net.layer_sizes),
            activations=tuple(net.activations),
            learning_rate=net.learning_rate,
            batch_size=net.batch_size,
            epochs=self.run.epochs,
            seed=self.run.seed,
            leaky_slope=net.leaky_slope,
            weight_init=net.weight_init,
        )
        return replace(cfg, **overrides) if overrides else cfg

    def violations(self):
        problems = list(self.network_config().violations())
        par = self.parallel
        if par.children < 1:
            problems.append(f"parallel.children must be >= 1, got {par.children}")
        if par.workers < 1:
            problems.append(f"parallel.workers must be >= 1, got {par.workers}")
        if par.children > 1 and par.workers > par.children:
            problems.append(
                f"parallel.workers ({par.workers}) may not exceed parallel.children ({par.children})"
            )
        if par.combiner not in COMBINERS:
            problems.append(f"parallel.combiner must be one of {COMBINERS}, got {par.combiner!r}")
        if par.child_init not in CHILD_INITS:
            problems.append(f"parallel.child_init must be one of {CHILD_INITS}, got {par.child_init!r}")
        if par.backend not in BACKENDS:
            problems.append(f"parallel.backend must be one of {BACKENDS}, got {par.backend!r}")
        if self.run.eval_every < 1:
            problems.append(f"run.eval_every must be >= 1, got {self.run.eval_every}")
        if any(k < 2 for k in self.sweep.children_set):
            problems.append("sweep.children_set entries must be >= 2")
        if self.sweep.activation_children < 2:
            problems.append("sweep.activation_children must be >= 2")
        if self.bench.children < 2:
            problems.append("bench.children must be >= 2")
        if any(w < 1 for w in self.bench.workers_set):
            problems.append("bench.workers_set entries must be >= 1")
        if self.bench.epochs < 1 or self.bench.repeats < 1:
            problems.append("bench.epochs and bench.repeats must be >= 1")
        return problems

    def validate(self):
        problems = self.violations()
        if problems:
            raise ValidationError(problems)
        return self

    def with_values(self, values):
        """Copy with ``{"section.key": value}`` overrides marked explicit."""
        sections = {name: replace(getattr(self, name)) for name in SECTIONS}
        for dotted, value in values.items():
            section, key = dotted.split(".")
            setattr(sections[section], key, value)
        return RunConfig(**sections, explicit=self.explicit | frozenset(values))


_TYPES = {
    ("network", "layer_sizes"): "int_list",
    ("network", "activations"): "str_list",
    ("network", "learning_rate"): float,
    ("network", "batch_size"): int,
    ("network", "leaky_slope"): float,
    ("network", "weight_init"): str,
    ("parallel", "children"): int,
    ("parallel", "workers"): int,
    ("parallel", "combiner"): str,
    ("parallel", "child_init"): str,
    ("parallel", "backend"): str,
    ("data", "dir"): "optional_str",
    ("run", "epochs"): int,
    ("run", "seed"): "seed",
    ("run", "eval_every"): int,
    ("run", "output_csv"): str,
    ("run", "checkpoint_dir"): "optional_str",
    ("sweep", "activations"): "str_list",
    ("sweep", "activation_children"): int,
    ("sweep", "children_set"): "int_list",
    ("sweep", "children_learning_rate"): float,
    ("bench", "children"): int,
    ("bench", "workers_set"): "int_list",
    ("bench", "epochs"): int,
    ("bench", "repeats"): int,
    ("bench", "subset"): "optional_int",
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _coerce(section, key, value, line):
    kind = _TYPES[(section, key)]
    where = f"{section}.{key}"

    def fail(expected):
        raise ConfigError(f"{where}: expected {expected}, got {value!r}", line)

    if kind is int:
        if not _is_int(value):
            fail("an integer")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            fail("a string")
        return value
    if kind == "optional_str":
        if value is not None and not isinstance(value, str):
            fail("a string or null")
        return value
    if kind == "optional_int":
        if value is not None and not _is_int(value):
            fail("an integer or null")
        return value
    if kind == "seed":
        if value == "time" or (_is_int(value) and value >= 0):
            return value
        fail("a non-negative integer or 'time'")
    if kind == "int_list":
        if not isinstance(value, list) or not all(_is_int(v) for v in value):
            fail("a list of integers")
        return list(value)
    if kind == "str_list":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            fail("a list of strings")
        return list(value)
    raise AssertionError(kind)


def _section_keys(section):
    return {f.name for f in fields(SECTIONS[section])}


def _mapping_items(node):
    """Yield ``(key, value_node, line)`` for a YAML mapping node."""
    for key_node, value_node in node.value:
        yield key_node.value, value_node, key_node.start_mark.line + 1


def parse_config(text, source="<string>"):
    """Parse configuration text into a validated :class:`RunConfig`."""
    loader = yaml.SafeLoader(text)
    try:
        root = loader.get_single_node()
        if root is None:
            return RunConfig().validate()
        if not isinstance(root, yaml.MappingNode):
            raise ConfigError(f"{source}: top level must be a mapping", root.start_mark.line + 1)
        values = {}
        for key, node, line in _mapping_items(root):
            if key in SECTIONS:
                if not isinstance(node, yaml.MappingNode):
                    raise ConfigError(f"section {key!r} must be a mapping", line)
                allowed = _section_keys(key)
                for sub, sub_node, sub_line in _mapping_items(node):
                    if sub not in allowed:
                        raise ConfigError(
                            f"unknown key {key}.{sub}; allowed: {', '.join(sorted(allowed))}",
                            sub_line,
                        )
                    raw = loader.construct_object(sub_node, deep=True)
                    values[f"{key}.{sub}"] = _coerce(key, sub, raw, sub_line)
            elif key in SHORTCUTS:
                section, sub = SHORTCUTS[key]
                raw = loader.construct_object(node, deep=True)
                values[f"{section}.{sub}"] = _coerce(section, sub, raw, line)
            else:
                raise ConfigError(f"unknown key {key!r}", line)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{source}: {exc.problem or exc}", line) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    finally:
        loader.dispose()
    return RunConfig().with_values(values).validate()


def default_config_path():
    """``config.yaml`` beside the running executable, else in the cwd."""
    for directory in (Path(sys.argv[0]).resolve().parent, Path.cwd()):
        candidate = directory / DEFAULT_FILENAME
        if candidate.is_file():
            return candidate
    return None


def load_config(path=None):
    """Load a :class:`RunConfig`; with no path, use ``config.yaml`` if present."""
    if path is None:
        path = default_config_path()
        if path is None:
            return RunConfig().validate()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def dump_config(cfg):
    """Serialise to the full nested YAML form accepted by :func:`parse_config`."""
    doc = {
        name: {f.name: getattr(getattr(cfg, name), f.name) for f in fields(SECTIONS[name])}
        for name in SECTIONS
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)
