"""Versioned JSON schemas for every file the command line reads.

All objects are closed (unknown keys are rejected).  Real numbers travel
as decimal strings; exact integers stay integers.
"""
from __future__ import annotations

import jsonschema

VERSION = 1

_INT = {"type": "integer"}
_BOOL = {"type": "boolean"}
_STR = {"type": "string"}
_DEC = {"type": "string", "pattern": r"^-?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?$|^nan$"}
_FRAC = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}
_INTVEC = {"type": "array", "items": _INT}
_INTMAT = {"type": "array", "items": _INTVEC}
_WORD = {"type": "array", "items": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2}}
_MAT2 = {"type": "array", "items": _INTVEC, "minItems": 2, "maxItems": 2}
_VERSION = {"const": VERSION}


def _obj(required: dict, optional: dict | None = None) -> dict:
    props = dict(required)
    props.update(optional or {})
    return {"type": "object", "properties": props, "required": sorted(required),
            "additionalProperties": False}


def _nullable(s: dict) -> dict:
    return {"anyOf": [s, {"type": "null"}]}


_TABLE = _nullable(_obj({"a": _FRAC, "b": _FRAC}))
_WORD_ENTRY = _obj({"word": _WORD, "matrix": _MAT2},
                   {"trace": _INT, "hyperbolic": _BOOL, "expanding_direction": _nullable(_DEC)})

SURFACE = _obj(
    {"n_squares": _INT, "right": _INTVEC, "top": _INTVEC,
     "scale": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2}},
    {"version": _VERSION})

SEEDS = _obj({"version": _VERSION, "classes": _INTMAT})

KERNEL_WORD = _obj({"version": _VERSION, "word": _WORD,
                    "derivatives": {"type": "array", "items": _MAT2}})

REP = _obj({
    "version": _VERSION,
    "table": _TABLE,
    "surface": SURFACE,
    "search_bound": _INT,
    "genus": _INT,
    "intersection_matrix": _INTMAT,
    "generators": {"type": "array", "items": _obj(
        {"word": _WORD, "derivative": _MAT2, "homology_matrix": _INTMAT})},
    "seeds": _INTMAT,
    "overlapping_seeds": _BOOL,
    "subspaces": {"type": "array", "items": _obj(
        {"basis": _INTMAT, "images": {"type": "array", "items": _INTMAT},
         "zero_drift": _BOOL, "tautological_exclusion": _BOOL})},
})

_SAMPLE = _obj({"subspace_index": _INT, "count": _INT, "hyperbolic": _INT,
                "words": {"type": "array", "items": _WORD_ENTRY}})

KERNEL = _obj({"version": _VERSION, "max_len": _INT,
               "samples": {"type": "array", "items": _SAMPLE}, "joint": _SAMPLE})

CHAIN = _obj({"version": _VERSION, "stage": _INT, "conjugator_depth": _INT,
              "generators": {"type": "array", "items": _WORD_ENTRY}, "verified": _BOOL,
              "commutator": _nullable(_obj({"h": _WORD, "k": _WORD, "word": _WORD,
                                            "matrix": _MAT2}))})

GAPS = _obj({"version": _VERSION, "monotone": _BOOL, "budgets": {"type": "array", "items": _obj(
    {"budget": _INT, "count": _INT, "max_gap": _DEC, "vacuous": _BOOL,
     "directions": {"type": "array", "items": _DEC}})}})

_RUN = _obj({"kind": {"enum": ["generic", "kernel", "control", "single"]}, "label": _STR,
             "angle": _DEC, "slope": _nullable(_DEC),
             "window": _nullable({"type": "array", "items": _INT, "minItems": 2, "maxItems": 2}),
             "reflections": _INT, "retries": _INT, "max_displacement": _DEC, "digest": _STR,
             "error": _nullable(_STR)})

SCAN = _obj({"version": _VERSION, "table": _TABLE, "seed": _INT, "horizon": _DEC,
             "runs": {"type": "array", "items": _RUN}})

DIFFUSE = _obj({"version": _VERSION, "table": _TABLE, "horizon": _DEC, "run": _RUN})

RANK2 = _obj({"version": _VERSION, "table": _TABLE, "classes": _INTMAT, "strips": _INTMAT,
              "matrix": _INTMAT, "determinant": _INT, "verdict": _BOOL})

SCHEMAS = {
    "surface": SURFACE, "seeds": SEEDS, "kernel-word": KERNEL_WORD, "rep": REP,
    "kernel": KERNEL, "chain": CHAIN, "gaps": GAPS, "scan": SCAN, "diffuse": DIFFUSE,
    "rank2": RANK2,
}


def validate(kind: str, data) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``data`` matches the named schema."""
    jsonschema.validate(data, SCHEMAS[kind])
