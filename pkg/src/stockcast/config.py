"""Flat key=value run configuration with dotted section prefixes.

One file drives every command: data locations, window sizes, fold
settings, model declarations, sentiment inputs, and tuning spaces.
Unknown keys are rejected at parse time so a typo cannot silently fall
back to a default, and every command re-emits the resolved settings it
actually ran with.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .evaluation import ALLOWED_OPTIONS, FAMILIES, ModelSpec

DEFAULT_MODELS = ("persistence", "lstm", "additive", "sarima")

_STATIC_KEYS = frozenset(
    {
        "data.dir",
        "data.symbols",
        "window.lookback",
        "window.horizon",
        "folds.count",
        "folds.test_len",
        "seed",
        "out.dir",
        "models",
        "sentiment.docs",
        "sentiment.lexicon",
        "sentiment.corpus",
        "sentiment.model",
        "sentiment.scores",
        "interval.level",
        "interval.sims",
        "tune.model",
        "tune.symbol",
        "tune.max_evals",
    }
)


def _to_bool(raw: str) -> bool:
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _to_int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in raw.split(",") if v.strip())


OPTION_TYPES = {
    "multivariate": _to_bool,
    "use_sentiment": _to_bool,
    "boosted": _to_bool,
    "lookback": int,
    "hidden": int,
    "epochs": int,
    "batch_size": int,
    "n_changepoints": int,
    "n_trees": int,
    "max_leaves": int,
    "min_samples_leaf": int,
    "max_bins": int,
    "learning_rate": float,
    "clip_norm": float,
    "lambda_delta": float,
    "l2_leaf_penalty": float,
    "boost_learning_rate": float,
    "capacity": float,
    "trend": str,
    "order": _to_int_tuple,
    "lags": _to_int_tuple,
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed key=value settings plus typed accessors with defaults."""

    raw: dict

    def _int(self, key: str, default: int) -> int:
        try:
            return int(self.raw.get(key, default))
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {self.raw[key]!r}")

    def _float(self, key: str, default: float) -> float:
        try:
            return float(self.raw.get(key, default))
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {self.raw[key]!r}")

    @property
    def data_dir(self) -> Path:
        return Path(self.raw.get("data.dir", "data"))

    @property
    def symbols(self) -> tuple[str, ...]:
        raw = self.raw.get("data.symbols", "")
        symbols = tuple(s.strip() for s in raw.split(",") if s.strip())
        if not symbols:
            raise ConfigError("data.symbols must list at least one symbol")
        return symbols

    @property
    def lookback(self) -> int:
        return self._int("window.lookback", 30)

    @property
    def horizon(self) -> int:
        return self._int("window.horizon", 5)

    @property
    def n_folds(self) -> int:
        return self._int("folds.count", 5)

    @property
    def test_len(self) -> int:
        return self._int("folds.test_len", self.horizon)

    @property
    def seed(self) -> int:
        return self._int("seed", 0)

    @property
    def out_dir(self) -> Path:
        return Path(self.raw.get("out.dir", "out"))

    @property
    def interval_level(self) -> float:
        return self._float("interval.level", 0.8)

    @property
    def interval_sims(self) -> int:
        return self._int("interval.sims", 1000)

    def model_names(self) -> tuple[str, ...]:
        raw = self.raw.get("models")
        if raw is None:
            return DEFAULT_MODELS
        names = tuple(s.strip() for s in raw.split(",") if s.strip())
        if not names:
            raise ConfigError("models must list at least one model name")
        return names

    def _family_of(self, name: str) -> str:
        family = self.raw.get(f"model.{name}.family")
        if family is None:
            if name in FAMILIES:
                return name
            raise ConfigError(
                f"model.{name}.family missing and {name!r} is not a family name"
            )
        if family not in FAMILIES:
            raise ConfigError(
                f"model.{name}.family: unknown family {family!r}; pick one of {FAMILIES}"
            )
        return family

    def model_spec(self, name: str) -> ModelSpec:
        family = self._family_of(name)
        prefix = f"model.{name}."
        options = {}
        for key, raw_value in self.raw.items():
            if not key.startswith(prefix) or key == prefix + "family":
                continue
            opt = key[len(prefix) :]
            if opt not in ALLOWED_OPTIONS[family]:
                raise ConfigError(
                    f"{key}: option not valid for family {family!r} "
                    f"(allowed: {sorted(ALLOWED_OPTIONS[family])})"
                )
            try:
                options[opt] = OPTION_TYPES[opt](raw_value)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}")
        spec = ModelSpec(name=name, family=family, options=options)
        spec.validate()
        return spec

    def model_specs(self) -> list[ModelSpec]:
        return [self.model_spec(name) for name in self.model_names()]

    def with_overrides(self, seed=None, out_dir=None) -> "RunConfig":
        raw = dict(self.raw)
        if seed is not None:
            raw["seed"] = str(int(seed))
        if out_dir is not None:
            raw["out.dir"] = str(out_dir)
        return RunConfig(raw)

    def resolved_lines(self) -> list[str]:
        """The effective configuration, defaults filled in, sorted."""
        eff = dict(self.raw)
        eff.setdefault("data.dir", "data")
        eff.setdefault("window.lookback", "30")
        eff.setdefault("window.horizon", "5")
        eff.setdefault("folds.count", "5")
        eff.setdefault("folds.test_len", str(self.test_len))
        eff.setdefault("seed", "0")
        eff.setdefault("out.dir", "out")
        eff.setdefault("interval.level", "0.8")
        eff.setdefault("interval.sims", "1000")
        if "models" not in eff:
            eff["models"] = ",".join(DEFAULT_MODELS)
        for name in self.model_names():
            eff.setdefault(f"model.{name}.family", self._family_of(name))
        return [f"{k}={eff[k]}" for k in sorted(eff)]


def _validate_keys(raw: dict) -> None:
    model_names = set()
    for key in raw:
        if key.startswith("model.") and key.count(".") >= 2:
            model_names.add(key.split(".")[1])
    for key in raw:
        if key in _STATIC_KEYS:
            continue
        parts = key.split(".")
        if parts[0] == "model" and len(parts) == 3 and parts[1] in model_names:
            if parts[2] == "family" or parts[2] in OPTION_TYPES:
                continue
            raise ConfigError(
                f"unknown model option {parts[2]!r} in key {key!r}"
            )
        if parts[0] == "tune" and len(parts) == 3 and parts[1] == "param":
            if parts[2] in OPTION_TYPES:
                continue
            raise ConfigError(f"unknown tunable option {parts[2]!r} in key {key!r}")
        raise ConfigError(f"unknown config key {key!r}")


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; comments start with #."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected key=value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        raw[key] = value
    _validate_keys(raw)
    return RunConfig(raw)


def load_config(path: str | Path) -> RunConfig:
    fp = Path(path)
    if not fp.exists():
        raise ConfigError(f"config file not found: {fp}")
    return parse_config(fp.read_text())
