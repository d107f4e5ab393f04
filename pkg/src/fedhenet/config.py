"""Experiment configuration: a YAML file of nested key/value sections with
string, number, boolean, and list values.  Validation reports the exact key
path of every problem."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .data import PartitionScheme, PartitionSpec
from .errors import ConfigError
from .rolann import ActivationKind

_ALGORITHMS = ("fedhenet", "fedavg", "fedprox")


@dataclass
class ExperimentConfig:
    train_path: str
    test_path: str
    algorithm: str = "fedhenet"
    clients: int = 2
    partition: PartitionSpec = None
    lam: float = 0.01
    epsilon: float = 0.05
    activation: ActivationKind = ActivationKind.IDENTITY
    include_bias: bool = True
    he_enabled: bool = False
    he_backend: str = "ckks"
    key_file: str = ""
    transport: str = "loopback"
    round_id: int = 0
    timeout: float = 300.0
    rounds: int = 10
    local_epochs: int = 1
    learning_rate: float = 0.01
    batch_size: int = 64
    mu: float = 0.0
    seed: int = 0
    output_dir: str = "out"
    raw: dict = field(default_factory=dict)


class _Checker:
    def __init__(self, data: dict, path: str = ""):
        self.data = data
        self.path = path

    def _where(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def section(self, key: str, required: bool = False) -> "_Checker":
        val = self.data.get(key)
        if val is None:
            if required:
                raise ConfigError(f"missing required section '{self._where(key)}'")
            val = {}
        if not isinstance(val, dict):
            raise ConfigError(f"'{self._where(key)}' must be a mapping")
        return _Checker(val, self._where(key))

    def get(self, key: str, kind, default=None, required: bool = False, choices=None):
        val = self.data.get(key)
        if val is None:
            if required:
                raise ConfigError(f"missing required key '{self._where(key)}'")
            return default
        if kind is float and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if kind is not None and not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
            raise ConfigError(
                f"'{self._where(key)}' must be {getattr(kind, '__name__', kind)}, got {type(val).__name__}"
            )
        if choices is not None and val not in choices:
            raise ConfigError(f"'{self._where(key)}' must be one of {choices}, got {val!r}")
        return val

    def unknown_keys(self, known):
        extra = set(self.data) - set(known)
        if extra:
            where = self.path or "top level"
            raise ConfigError(f"unknown key(s) {sorted(extra)} in {where}")


def load_config(path, overrides: dict = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    if overrides:
        data = _merge(data, overrides)
    return parse_config(data)


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        elif v is not None:
            out[k] = v
    return out


def parse_config(data: dict) -> ExperimentConfig:
    root = _Checker(data)
    root.unknown_keys(
        {
            "dataset",
            "algorithm",
            "clients",
            "partition",
            "model",
            "he",
            "baseline",
            "transport",
            "round_id",
            "timeout",
            "seed",
            "output_dir",
        }
    )
    dataset = root.section("dataset", required=True)
    dataset.unknown_keys({"train", "test"})
    train_path = dataset.get("train", str, required=True)
    test_path = dataset.get("test", str, default=train_path)

    algorithm = root.get("algorithm", str, default="fedhenet", choices=_ALGORITHMS)
    clients = root.get("clients", int, default=2)
    if clients < 1:
        raise ConfigError("'clients' must be >= 1")

    part = root.section("partition")
    part.unknown_keys({"scheme", "alpha", "seed"})
    scheme_name = part.get(
        "scheme", str, default="iid", choices=[s.value for s in PartitionScheme]
    )
    spec = PartitionSpec(
        scheme=PartitionScheme(scheme_name),
        client_count=clients,
        seed=part.get("seed", int, default=root.get("seed", int, default=0)),
        alpha=part.get("alpha", float, default=1.0),
    )

    model = root.section("model")
    model.unknown_keys({"lambda", "epsilon", "activation", "bias"})
    lam = model.get("lambda", float, default=0.01)
    if lam < 0:
        raise ConfigError("'model.lambda' must be >= 0")
    epsilon = model.get("epsilon", float, default=0.05)
    if not (0 < epsilon < 0.5):
        raise ConfigError("'model.epsilon' must lie in (0, 0.5)")
    activation = ActivationKind(
        model.get("activation", str, default="identity", choices=["identity", "logistic"])
    )
    include_bias = model.get("bias", bool, default=True)

    he = root.section("he")
    he.unknown_keys({"enabled", "backend", "key_file"})
    he_enabled = he.get("enabled", bool, default=False)
    he_backend = he.get("backend", str, default="ckks", choices=["ckks", "mock"])
    key_file = he.get("key_file", str, default="")
    if he_enabled and he_backend == "ckks" and not key_file:
        raise ConfigError("'he.key_file' is required when HE is enabled with the ckks backend")

    base = root.section("baseline")
    base.unknown_keys({"rounds", "local_epochs", "learning_rate", "batch_size", "mu"})

    return ExperimentConfig(
        train_path=train_path,
        test_path=test_path,
        algorithm=algorithm,
        clients=clients,
        partition=spec,
        lam=lam,
        epsilon=epsilon,
        activation=activation,
        include_bias=include_bias,
        he_enabled=he_enabled,
        he_backend=he_backend,
        key_file=key_file,
        transport=root.get("transport", str, default="loopback"),
        round_id=root.get("round_id", int, default=0),
        timeout=root.get("timeout", float, default=300.0),
        rounds=base.get("rounds", int, default=10),
        local_epochs=base.get("local_epochs", int, default=1),
        learning_rate=base.get("learning_rate", float, default=0.01),
        batch_size=base.get("batch_size", int, default=64),
        mu=base.get("mu", float, default=0.0),
        seed=root.get("seed", int, default=0),
        output_dir=root.get("output_dir", str, default="out"),
        raw=data,
    )
