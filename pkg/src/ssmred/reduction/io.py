"""JSON documents for fitted models."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .polynomial import PolynomialMap
from .slow_manifold import SlowManifoldModel
from .ssm import AdiabaticSsmModel, Embedding, LocalSsmModel

SM_SCHEMA = "ssmred.slow_manifold/1"
ASSM_SCHEMA = "ssmred.assm/1"


class ModelFormatError(ValueError):
    pass


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _poly_to_doc(p: PolynomialMap) -> dict:
    return {"input_dim": p.input_dim, "output_dim": p.output_dim, "coefficients": p.to_dict()}


def _poly_from_doc(doc: dict) -> PolynomialMap:
    p = PolynomialMap.from_dict(doc["input_dim"], doc["coefficients"])
    if p.output_dim != doc["output_dim"]:
        raise ModelFormatError("coefficient vectors do not match output_dim")
    return p


def sm_to_dict(model: SlowManifoldModel) -> dict:
    return {
        "schema": SM_SCHEMA,
        "forward": _poly_to_doc(model.forward),
        "u_range": [model.u_lo, model.u_hi],
        "inverse_table": {"u": _floats(model.table_u), "g": _floats(model.table_g)},
        "monotone": model.monotone,
        "increasing": model.increasing,
        "roundtrip_bound": model.roundtrip_bound,
        "diagnostics": model.diagnostics,
    }


def sm_from_dict(doc: dict) -> SlowManifoldModel:
    _check_schema(doc, SM_SCHEMA)
    table = doc["inverse_table"]
    return SlowManifoldModel(
        forward=_poly_from_doc(doc["forward"]),
        u_lo=float(doc["u_range"][0]),
        u_hi=float(doc["u_range"][1]),
        table_u=np.array(table["u"], dtype=float),
        table_g=np.array(table["g"], dtype=float),
        monotone=bool(doc["monotone"]),
        increasing=bool(doc["increasing"]),
        roundtrip_bound=float(doc["roundtrip_bound"]),
        diagnostics=dict(doc.get("diagnostics", {})),
    )


def _local_to_doc(m: LocalSsmModel) -> dict:
    return {
        "u_bar": m.u_bar,
        "x0": _floats(m.x0),
        "V": _floats(m.V),
        "h0": _poly_to_doc(m.h0),
        "r": _poly_to_doc(m.r),
        "eta_range": _floats(m.eta_range),
        "diagnostics": m.diagnostics,
    }


def _local_from_doc(doc: dict, embedding: Embedding, dt: float) -> LocalSsmModel:
    return LocalSsmModel(
        u_bar=float(doc["u_bar"]),
        x0=np.array(doc["x0"], dtype=float),
        V=np.array(doc["V"], dtype=float),
        h0=_poly_from_doc(doc["h0"]),
        r=_poly_from_doc(doc["r"]),
        embedding=embedding,
        dt=dt,
        eta_range=np.array(doc["eta_range"], dtype=float),
        diagnostics=dict(doc.get("diagnostics", {})),
    )


def assm_to_dict(model: AdiabaticSsmModel) -> dict:
    emb = model.embedding
    return {
        "schema": ASSM_SCHEMA,
        "embedding": {"p": emb.p, "delay": emb.delay},
        "dt": model.dt,
        "interpolation": model.rule,
        "shared_tangent": model.shared_tangent,
        "u_grid": _floats(model.u_grid),
        "locals": [_local_to_doc(m) for m in model.locals],
    }


def assm_from_dict(doc: dict) -> AdiabaticSsmModel:
    _check_schema(doc, ASSM_SCHEMA)
    emb = Embedding(int(doc["embedding"]["p"]), int(doc["embedding"]["delay"]))
    dt = float(doc["dt"])
    locals_ = [_local_from_doc(d, emb, dt) for d in doc["locals"]]
    return AdiabaticSsmModel(locals_, shared_tangent=bool(doc["shared_tangent"]), rule=doc["interpolation"])


def _check_schema(doc: dict, expected: str) -> None:
    if doc.get("schema") != expected:
        raise ModelFormatError(f"expected schema {expected!r}, found {doc.get('schema')!r}")


def save_model(model, path) -> None:
    doc = sm_to_dict(model) if isinstance(model, SlowManifoldModel) else assm_to_dict(model)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path):
    doc = json.loads(Path(path).read_text())
    schema = doc.get("schema")
    if schema == SM_SCHEMA:
        return sm_from_dict(doc)
    if schema == ASSM_SCHEMA:
        return assm_from_dict(doc)
    raise ModelFormatError(f"unknown model schema {schema!r}")
