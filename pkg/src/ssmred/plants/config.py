"""Plant parameter sets from JSON, one top-level object per plant name."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .hasel import HaselPlant, PouchParams
from .joint import JointParams, JointPlant
from .sdof import SdofParams, SdofPlant

PLANTS = {
    "sdof": (SdofParams, SdofPlant),
    "hasel": (PouchParams, HaselPlant),
    "joint": (JointParams, JointPlant),
}


def _build(cls, values: dict, where: str):
    if not isinstance(values, dict):
        raise ValueError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for key, val in values.items():
        if cls is JointParams and key in ("left", "right"):
            val = _build(SdofParams, val, f"{where}.{key}")
        kwargs[key] = val
    return cls(**kwargs)


def parse_params(name: str, values: dict):
    if name not in PLANTS:
        raise ValueError(f"unknown plant {name!r}; expected one of {sorted(PLANTS)}")
    return _build(PLANTS[name][0], values, name)


def load_plant_params(source) -> dict:
    """Parse a JSON document (path, str or dict) into ``{plant name: params}``."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        doc = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ValueError("plant parameter document must be a JSON object")
    return {name: parse_params(name, vals) for name, vals in doc.items()}


def make_plant(name: str, values: dict | None = None):
    params_cls, plant_cls = PLANTS[name] if name in PLANTS else (None, None)
    if plant_cls is None:
        raise ValueError(f"unknown plant {name!r}")
    return plant_cls(parse_params(name, values or {}))
