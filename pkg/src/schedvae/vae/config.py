"""Model hyperparameters and the named presets."""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, fields, replace

from ..encoding import DEFAULT_STEP, MAX_LEN, check_step


class ConfigError(ValueError):
    pass


KINDS = ("discrete", "continuous")
ARCHS = ("FF", "CNN", "RNN")


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    arch: str
    n_blocks: int
    block_size: int
    lr: float
    beta: float
    alpha: float | None = None
    latent: int = 6
    batch_size: int = 1024
    dropout: float = 0.1
    teacher_forcing: float = 0.5
    step: int = DEFAULT_STEP
    max_len: int = MAX_LEN
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.arch not in ARCHS:
            raise ConfigError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if (self.alpha is not None) != (self.kind == "continuous"):
            raise ConfigError("alpha is required for continuous models and only for them")
        if self.n_blocks < 1 or self.block_size < 2 or self.latent < 1:
            raise ConfigError("block count, block size and latent size must be positive")
        if not 0 <= self.dropout < 1 or not 0 <= self.teacher_forcing <= 1:
            raise ConfigError("dropout and teacher-forcing ratio must be probabilities")
        if self.lr <= 0 or self.beta < 0 or self.batch_size < 1:
            raise ConfigError("lr and batch size must be positive, beta non-negative")
        check_step(self.step)

    @property
    def seq_len(self) -> int:
        """Number of tokens the decoder emits."""
        return 1440 // self.step if self.kind == "discrete" else self.max_len

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp["model"] = {k: ("" if v is None else str(v)) for k, v in asdict(self).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_mapping(cls, values: dict) -> "ModelConfig":
        """Build from string values, starting from ``preset`` when given."""
        values = dict(values)
        base = {}
        preset = values.pop("preset", None)
        if preset:
            base = asdict(get_preset(preset))
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown model setting {key!r}")
            base[key] = _coerce(key, types[key], raw)
        try:
            return cls(**base)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if "model" not in cp:
            raise ConfigError("config has no [model] section")
        return cls.from_mapping(dict(cp["model"]))


def _coerce(key, typ, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if "int" in str(typ):
            return int(raw)
        if "float" in str(typ):
            return None if raw in ("", "None") else float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw


def _p(name, kind, arch, n, s, lr, beta, alpha=None):
    return ModelConfig(kind, arch, n, s, lr, beta, alpha, name=name)


PRESETS: dict[str, ModelConfig] = {
    c.name: c
    for c in (
        _p("DiscFF", "discrete", "FF", 3, 32, 0.001, 0.005),
        _p("DiscCNN", "discrete", "CNN", 6, 512, 0.01, 0.005),
        _p("DiscRNN", "discrete", "RNN", 4, 512, 0.001, 0.01),
        _p("ContFF", "continuous", "FF", 4, 128, 0.0001, 0.01, 200.0),
        _p("ContCNN", "continuous", "CNN", 5, 128, 0.001, 0.01, 200.0),
        _p("ContRNN", "continuous", "RNN", 4, 256, 0.001, 0.01, 200.0),
        _p("ContRNN-Mid", "continuous", "RNN", 2, 256, 0.002, 0.005, 200.0),
        _p("ContRNN-Small", "continuous", "RNN", 2, 128, 0.004, 0.0025, 200.0),
        _p("ContRNN-Tiny", "continuous", "RNN", 2, 64, 0.008, 0.00125, 200.0),
    )
}


def get_preset(name: str) -> ModelConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
