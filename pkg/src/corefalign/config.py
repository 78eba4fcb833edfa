"""Run configuration: one YAML/JSON file plus command-line overrides.

Example::

    output: out
    workers: 2
    treebanks:
      bokmaal:
        ann_dir: narc/bokmaal
        ud: {train: ud/bm-train.conllu, dev: ud/bm-dev.conllu, test: ud/bm-test.conllu}
        norne: {train: norne/bm-train.conllu}
    align: {fuzzy_window_slack: 2}
    ne: {key: name, scheme: bio}

Relative paths are resolved against the directory holding the file.
"""
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml

from .align import AlignSettings
from .errors import ConfigError

CONFIG_ENV = "COREFALIGN_CONFIG"


@dataclass
class TreebankConfig:
    name: str
    ud: dict
    ann_dir: Optional[Path] = None
    norne: dict = field(default_factory=dict)


@dataclass
class NESettings:
    key: str = "name"
    scheme: str = "plain"
    outside: Optional[str] = "O"


@dataclass
class Config:
    output: Path
    treebanks: list
    align: AlignSettings = field(default_factory=AlignSettings)
    ne: NESettings = field(default_factory=NESettings)
    relation_aliases: Optional[dict] = None
    pipe_correction: bool = True
    workers: int = 1
    strict: bool = False

    def treebank(self, name):
        for tb in self.treebanks:
            if tb.name == name:
                return tb
        raise ConfigError(f"no treebank named {name!r}")


def _dataclass_from(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {where} setting(s): {', '.join(sorted(unknown))}")
    return cls(**data)


def _apply_override(data, dotted, value):
    keys = dotted.split(".")
    cur = data
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = yaml.safe_load(value)


def load_config(path=None, overrides=()):
    """Read a config file (``path`` or ``$COREFALIGN_CONFIG``) and apply ``key=value`` overrides."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        raise ConfigError(f"no config file given and ${CONFIG_ENV} is not set")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        _apply_override(data, key, value)
    return config_from_dict(data, path.parent)


def config_from_dict(data, base_dir="."):
    base = Path(base_dir)

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    if "treebanks" not in data or not data["treebanks"]:
        raise ConfigError("config needs at least one treebank")
    tbs = []
    for name, tb in sorted(data["treebanks"].items()):
        if not isinstance(tb, dict) or "ud" not in tb:
            raise ConfigError(f"treebank {name!r} needs a 'ud' mapping of split -> file")
        ud = {split: resolve(p) for split, p in tb["ud"].items()}
        for split, p in ud.items():
            if not p.exists():
                raise ConfigError(f"treebank {name}: {split} file {p} does not exist")
        ann_dir = resolve(tb["ann_dir"]) if tb.get("ann_dir") else None
        if ann_dir is not None and not ann_dir.is_dir():
            raise ConfigError(f"treebank {name}: annotation directory {ann_dir} does not exist")
        norne = tb.get("norne") or {}
        if isinstance(norne, list):
            norne = {str(i): p for i, p in enumerate(norne)}
        norne = {k: resolve(p) for k, p in norne.items()}
        for p in norne.values():
            if not p.exists():
                raise ConfigError(f"treebank {name}: entity file {p} does not exist")
        tbs.append(TreebankConfig(name, ud, ann_dir, norne))
    return Config(
        output=resolve(data.get("output", "out")),
        treebanks=tbs,
        align=_dataclass_from(AlignSettings, data.get("align"), "align"),
        ne=_dataclass_from(NESettings, data.get("ne"), "ne"),
        relation_aliases=data.get("relation_aliases"),
        pipe_correction=bool(data.get("pipe_correction", True)),
        workers=int(data.get("workers", 1)),
        strict=bool(data.get("strict", False)),
    )
