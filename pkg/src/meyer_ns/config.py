"""Flat key = value run configuration with line-aware error messages."""
from __future__ import annotations

import ast
import configparser
import re
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

SECTION = "run"


class ConfigError(ValueError):
    """Malformed or invalid configuration; the message carries the source line."""


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    M: int = 128
    p: float = 4.0
    m: float = 1.0
    shell_lo: int = 0
    shell_hi: int | None = None
    samples_per_shell: int = 8
    extra_shells: int = 2
    max_iter: int = 8
    tol: float = 1e-10
    smallness: float = 0.01
    preset: str = "single-atom"
    scale: float = 1e-3
    lam: int = 0
    seed: int = 0
    count: int = 100
    pairs: int = 50
    embedding_count: int = 8
    stability_tolerance: float = 0.25
    ramp: str = "quartic"

    def to_dict(self) -> dict:
        return asdict(self)


_KEY_ALIASES = {"lambda": "lam"}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str, where: str):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if key == "shell_hi":
            return None if raw in ("", "max", "none") else int(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: {key} = {raw!r} is not a valid {kind}") from None


def _line_numbers(text: str) -> dict[str, int]:
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s and not s.startswith(("#", ";", "[")) and "=" in s:
            out.setdefault(s.split("=", 1)[0].strip(), no)
    return out


def parse_config(text: str, source: str = "<config>", base: RunConfig | None = None) -> RunConfig:
    """Parse flat ``key = value`` lines (an optional [run] header is accepted)."""
    base = RunConfig() if base is None else base
    header = not any(line.strip().startswith("[") for line in text.splitlines())
    body = f"[{SECTION}]\n{text}" if header else text
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case sensitive (M vs m)
    try:
        parser.read_string(body, source=source)
    except configparser.ParsingError as exc:
        no, line = exc.errors[0]
        no = no - 1 if header else no
        try:
            line = ast.literal_eval(line)  # configparser stores repr(line)
        except (ValueError, SyntaxError):
            pass
        raise ConfigError(f"{source}:{no}: cannot parse {str(line).strip()!r}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc.message}") from None
    lines = _line_numbers(text)
    updates = {}
    for sec in parser.sections():
        for key, raw in parser.items(sec):
            name = _KEY_ALIASES.get(key, key)
            where = f"{source}:{lines.get(key, '?')}"
            if name not in _TYPES:
                raise ConfigError(f"{where}: unknown key {key!r}")
            updates[name] = _convert(name, raw, where)
    cfg = replace(base, **updates)
    try:
        validate(cfg)
    except ValueError as exc:
        raise ConfigError(f"{source}{_blame(str(exc), updates, lines)}: {exc}") from None
    return cfg


def _blame(message: str, updates: dict, lines: dict[str, int]) -> str:
    """':line' of the earliest key named in a validation message, if it came from the file."""
    names = {_KEY_ALIASES.get(k, k): k for k in lines}
    hits = []
    for name in updates:
        m = re.search(rf"\b{re.escape(name)}\b", message)
        key = names.get(name, name)
        if m is None and key != name:
            m = re.search(rf"\b{re.escape(key)}\b", message)
        if m and key in lines:
            hits.append((m.start(), lines[key]))
    return f":{min(hits)[1]}" if hits else ""


def validate(cfg: RunConfig) -> None:
    from .spectral import FrequencyLattice

    FrequencyLattice(cfg.n, cfg.M)
    if cfg.p <= cfg.n:
        raise ValueError(f"p = {cfg.p} must exceed n = {cfg.n}")
    if cfg.m <= 0:
        raise ValueError("m must be positive")
    if cfg.lam not in (0, 2, 4):
        raise ValueError(f"lambda must be 0 (off), 2 or 4, got {cfg.lam}")
    if cfg.ramp not in ("quartic", "smoothstep", "square"):
        raise ValueError(f"unknown ramp {cfg.ramp!r}")
    for key in ("count", "pairs", "embedding_count", "max_iter", "samples_per_shell"):
        if getattr(cfg, key) < 1:
            raise ValueError(f"{key} must be positive")


def default_config() -> RunConfig:
    text = resources.files("meyer_ns").joinpath("defaults.cfg").read_text()
    return parse_config(text, "defaults.cfg")


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None keyword overrides."""
    cfg = default_config()
    if path is not None:
        p = Path(path)
        cfg = parse_config(p.read_text(), str(p), cfg)
    given = {k: v for k, v in overrides.items() if v is not None}
    if given:
        cfg = replace(cfg, **given)
        try:
            validate(cfg)
        except ValueError as exc:
            raise ConfigError(f"command line: {exc}") from None
    return cfg
