"""Flat ``key=value`` configuration files.

Blank lines and ``#`` comments are ignored. Relative input paths resolve
against the config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..recommenders import METHODS, VARIANTS, HyperParams

_HP_KEYS = {f.name for f in fields(HyperParams)} - {"method", "variant"}


def parse_key_values(text: str) -> dict:
    out = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {line_no}: expected key=value, got {line!r}")
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_key_values(path) -> dict:
    try:
        return parse_key_values(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _list(v: str) -> tuple:
    return tuple(x.strip() for x in v.split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    events: Path
    embeddings: Path
    catalog: Path | None = None
    methods: tuple = METHODS
    variants: tuple = VARIANTS
    k: int = 10
    seed: int = 0
    budget: int = 40
    enable_mmr: bool = False
    rr_discount: float = 0.85
    min_session_length: int = 3
    workers: int = 1
    log: Path | None = None
    report: Path | None = None
    hyperparams: HyperParams = field(default_factory=HyperParams)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(read_key_values(path), Path(path).resolve().parent)

    @classmethod
    def from_mapping(cls, raw: dict, base_dir=Path(".")) -> "ExperimentConfig":
        raw = dict(raw)
        base_dir = Path(base_dir)

        def path(key, required=True):
            v = raw.pop(key, None)
            if v is None:
                if required:
                    raise ConfigError(f"missing required key {key!r}")
                return None
            p = Path(v)
            return p if p.is_absolute() else base_dir / p

        try:
            kw = {"events": path("events"), "embeddings": path("embeddings"),
                  "catalog": path("catalog", False), "log": path("log", False),
                  "report": path("report", False)}
            if "methods" in raw:
                kw["methods"] = _list(raw.pop("methods"))
            if "variants" in raw:
                kw["variants"] = _list(raw.pop("variants"))
            for key, conv in (("k", int), ("seed", int), ("budget", int), ("rr_discount", float),
                              ("min_session_length", int), ("workers", int), ("enable_mmr", _bool)):
                if key in raw:
                    kw[key] = conv(raw.pop(key))
            hp_raw = {key: raw.pop(key) for key in list(raw) if key in _HP_KEYS}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if raw:
            raise ConfigError(f"unknown key(s): {', '.join(sorted(raw))}")
        bad = [m for m in kw.get("methods", ()) if m not in METHODS]
        bad += [v for v in kw.get("variants", ()) if v not in VARIANTS]
        if bad:
            raise ConfigError(f"unknown method/variant name(s): {', '.join(bad)}")
        if kw.get("k", 10) < 1 or kw.get("budget", 40) < 0 or kw.get("workers", 1) < 1:
            raise ConfigError("k and workers must be >= 1, budget >= 0")
        kinds = {f.name: f.type for f in fields(HyperParams)}
        conv = {"int": int, "float": float, "str": str}
        try:
            hp = replace(HyperParams(), **{k: conv[kinds[k]](v) for k, v in hp_raw.items()})
        except ValueError as exc:
            raise ConfigError(f"bad hyperparameter: {exc}") from None
        return cls(hyperparams=hp, **kw)
