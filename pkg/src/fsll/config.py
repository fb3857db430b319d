"""Run configuration: a flat key = value file format plus --set overrides.

Files are line-oriented: blank lines and '#' comments are ignored,
"[section]" headers are allowed for grouping but carry no meaning, values
may be quoted. Every key has a typed converter; unknown keys are rejected
rather than ignored so typos fail loudly. A resolved copy of the full
configuration can be written back out and re-parsed to reproduce a run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .model import Arch
from .protocol import METHODS, TrainConfig


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _int_tuple(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(_int(part) for part in text.split(","))


def _str(text: str) -> str:
    return text.strip()


def _opt_str(text: str) -> str | None:
    t = text.strip()
    return t if t and t.lower() != "none" else None


def _opt_int(text: str) -> int | None:
    t = text.strip()
    if not t or t.lower() == "none":
        return None
    return _int(t)


@dataclass(frozen=True)
class RunConfig:
    # run identity
    method: str = "FSLL"
    seed: int = 0
    # architecture
    hidden_dims: tuple[int, ...] = (64,)
    feature_dim: int = 32
    # base phase
    base_epochs: int = 50
    base_lr: float = 0.1
    base_lr_drops: tuple[int, ...] = (30, 40)
    lr_drop_factor: float = 10.0
    base_batch_size: int = 128
    # incremental sessions
    session_epochs: int = 30
    session_lr: float = 1e-4
    fraction: float = 0.10
    lam: float = 5.0
    triplet_margin: float = 0.0
    triplet_reduction: str = "mean"
    cosine_loss: bool = True
    momentum: float = 0.0
    weight_decay: float = 0.0
    # data source: either two delimited files or a synthetic corpus
    data_train: str | None = None
    data_test: str | None = None
    grid_size: int | None = None
    classes: int = 20
    dim: int = 16
    grid: bool = False
    train_per_class: int = 100
    test_per_class: int = 50
    center_scale: float = 3.0
    noise: float = 1.0
    data_seed: int | None = None
    # schedule
    base_classes: int = 12
    ways: int = 2
    shots: int = 2
    increments: int = 4
    standardize: bool = True

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; valid methods: "
                              f"{', '.join(METHODS)}")
        if (self.data_train is None) != (self.data_test is None):
            raise ConfigError("data_train and data_test must be given together")
        try:
            self.to_train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(
            base_epochs=self.base_epochs, base_lr=self.base_lr,
            base_lr_drops=self.base_lr_drops, lr_drop_factor=self.lr_drop_factor,
            base_batch_size=self.base_batch_size,
            session_epochs=self.session_epochs, session_lr=self.session_lr,
            fraction=self.fraction, lam=self.lam,
            triplet_margin=self.triplet_margin,
            triplet_reduction=self.triplet_reduction, cosine_loss=self.cosine_loss,
            momentum=self.momentum, weight_decay=self.weight_decay, seed=self.seed)

    def to_arch(self) -> Arch:
        return Arch(hidden_dims=self.hidden_dims, feature_dim=self.feature_dim)


_CONVERTERS = {
    "method": _str,
    "seed": _int,
    "hidden_dims": _int_tuple,
    "feature_dim": _int,
    "base_epochs": _int,
    "base_lr": _float,
    "base_lr_drops": _int_tuple,
    "lr_drop_factor": _float,
    "base_batch_size": _int,
    "session_epochs": _int,
    "session_lr": _float,
    "fraction": _float,
    "lam": _float,
    "triplet_margin": _float,
    "triplet_reduction": _str,
    "cosine_loss": _bool,
    "momentum": _float,
    "weight_decay": _float,
    "data_train": _opt_str,
    "data_test": _opt_str,
    "grid_size": _opt_int,
    "classes": _int,
    "dim": _int,
    "grid": _bool,
    "train_per_class": _int,
    "test_per_class": _int,
    "center_scale": _float,
    "noise": _float,
    "data_seed": _opt_int,
    "base_classes": _int,
    "ways": _int,
    "shots": _int,
    "increments": _int,
    "standardize": _bool,
}

# "lambda" reads better in config files but is reserved as a Python name
_KEY_ALIASES = {"lambda": "lam"}


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    for ch in line:
        if ch == '"':
            in_quote = not in_quote
        if ch == "#" and not in_quote:
            break
        out.append(ch)
    return "".join(out)


def _unquote(text: str) -> str:
    t = text.strip()
    if len(t) >= 2 and t[0] == '"' and t[-1] == '"':
        return t[1:-1]
    return t


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key = value lines to a {field: typed value} dict."""
    items: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        key = _KEY_ALIASES.get(key, key)
        if key not in _CONVERTERS:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        try:
            items[key] = _CONVERTERS[key](_unquote(value))
        except ConfigError as exc:
            raise ConfigError(f"{source}: line {lineno}: {exc}") from None
    return items


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        items = parse_config_text(fh.read(), source=str(path))
    return replace(RunConfig(), **items)


def apply_overrides(config: RunConfig, pairs: list[str]) -> RunConfig:
    """--set key=value overrides, parsed exactly like file lines."""
    items: dict = {}
    for pair in pairs:
        items.update(parse_config_text(pair, source=f"--set {pair}"))
    return replace(config, **items)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    return str(value)


def resolved_text(config: RunConfig) -> str:
    """The full configuration as a parseable file; feeding it back through
    --config reproduces the run."""
    lines = ["# resolved run configuration"]
    for f in fields(RunConfig):
        key = "lambda" if f.name == "lam" else f.name
        lines.append(f"{key} = {_format_value(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"
