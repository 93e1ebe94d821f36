"""Deterministic JSON/CSV encoding and report dictionaries.

Floats are written with 17 significant digits so that reports are
byte-identical across runs and round-trip exactly.  Non-finite values are
written as the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .analysis import FrameworkAnalysis, ProjectionReport, StabilityVerdict

SCHEMA_VERSION = 1


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.0"  # drops the sign of -0.0
    text = format(x, ".17g")
    return text if any(c in text for c in ".e") else text + ".0"


def plain(obj):
    """Recursively convert numpy values and tuples into JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        text = format_float(obj)
        return json.dumps(text) if text in ("inf", "-inf", "nan") else text
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(str(obj))


def dumps(obj, indent=2) -> str:
    return _encode(plain(obj), indent, 0) + "\n"


def loads(text: str):
    """Inverse of :func:`dumps`, mapping the non-finite strings back to floats."""
    def fix(v):
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, list):
            return [fix(x) for x in v]
        if v in ("inf", "-inf", "nan"):
            return float(v)
        return v
    return fix(json.loads(text))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def table_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(plain(row.get(c))) for c in columns])
    return buf.getvalue()


def flatten(obj, prefix=""):
    """Dotted-key (key, value) pairs for every scalar leaf."""
    obj = plain(obj)
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from flatten(v, f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def flat_csv(obj) -> str:
    return table_csv([{"key": k, "value": v} for k, v in flatten(obj)], ["key", "value"])


# -- report sections -----------------------------------------------------------------

def stability_dict(st: StabilityVerdict) -> dict:
    out = {
        "verdict": st.verdict,
        "min_eigenvalue": st.min_eigenvalue,
        "eigenvalues": st.eigenvalues,
        "form": st.form,
        "strictly_proper_stress": st.strictly_proper,
        "note": st.note,
    }
    if st.zero_modes:
        out["zero_modes"] = [
            {"affine_residual": z.residual, "is_affine": z.is_affine, "is_trivial": z.is_trivial}
            for z in st.zero_modes
        ]
        out["conic_at_infinity"] = bool(st.conic.exists) if st.conic else None
    return out


def izmestiev_dict(res: FrameworkAnalysis) -> dict:
    out = {"status": res.izmestiev_status, "message": res.izmestiev_message}
    iz = res.izmestiev
    if iz is not None:
        out["certificate"] = iz.certificate.to_dict()
        out["alpha"] = iz.alpha
        out["b"] = iz.b
    return out


def analysis_dict(res: FrameworkAnalysis) -> dict:
    return {
        "dimensions": res.dimensions(),
        "stress_rank_gap_ratio": res.stresses.rank.gap_ratio,
        "izmestiev": izmestiev_dict(res),
        "stress_flex": {
            "verdict": res.verdict,
            "max_relative_residual": res.max_relative,
            "trivial_max_relative_residual": res.trivial_max_relative,
            "pairs": [
                {"stress": r.stress, "flex": r.flex_index, "relative": r.relative,
                 "residual": r.vector, "verdict": r.verdict}
                for r in res.residuals
            ],
        },
        "stability": stability_dict(res.stability),
    }


def projection_dict(rep: ProjectionReport) -> dict:
    return {
        "verdict": rep.verdict,
        "max_relative": rep.max_relative,
        "rotation_attempts": rep.attempts,
        "rotation": rep.rotation,
        "stress_dim": rep.stress_dim,
        "flex_dim": rep.flex_dim,
        "nontrivial_flex_dim": rep.nontrivial_flex_dim,
        "rank_gap_ratio": rep.rank_gap,
        "rows": [
            {"stress": r.stress_index, "flex": r.flex_index, "trivial": r.trivial,
             "height_condition": r.height_condition, "radial_condition": r.radial_condition,
             "height_relative": r.height_relative, "radial_relative": r.radial_relative}
            for r in rep.rows
        ],
    }
