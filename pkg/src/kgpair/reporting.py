"""Deterministic serialization for reports and probe results.

Every floating-point number is printed with 17 significant digits (lossless
round trip) and dictionary keys are emitted in sorted order, so identical
inputs produce byte-identical documents.  Infinities and NaN, which strict
JSON cannot carry, serialize as null.
"""

from __future__ import annotations

import json
import math
from importlib import resources


def _format_float(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        return "null"
    return format(value, ".17g")


def _encode(obj, pieces: list):
    if obj is None:
        pieces.append("null")
    elif obj is True:
        pieces.append("true")
    elif obj is False:
        pieces.append("false")
    elif isinstance(obj, int):
        pieces.append(str(obj))
    elif isinstance(obj, float):
        pieces.append(_format_float(obj))
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, dict):
        pieces.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if i:
                pieces.append(",")
            pieces.append(json.dumps(key))
            pieces.append(":")
            _encode(obj[key], pieces)
        pieces.append("}")
    elif isinstance(obj, (list, tuple)):
        pieces.append("[")
        for i, item in enumerate(obj):
            if i:
                pieces.append(",")
            _encode(item, pieces)
        pieces.append("]")
    else:
        try:
            _encode(obj.item(), pieces)  # numpy scalars
        except AttributeError:
            raise TypeError(f"cannot serialize {type(obj).__name__}") from None


def to_canonical_json(obj) -> str:
    pieces: list = []
    _encode(obj, pieces)
    pieces.append("\n")
    return "".join(pieces)


def sweep_csv(entries, tau_sep: float) -> str:
    """CSV of (c, separated, min_gap) with a trailing candidate summary line."""
    lines = ["c,separated,min_gap"]
    candidates = []
    for entry in entries:
        gap = "" if math.isinf(entry.min_gap) else format(entry.min_gap, ".17g")
        lines.append(f"{format(entry.c, '.17g')},{int(entry.separated)},{gap}")
        if not entry.separated:
            candidates.append(format(entry.c, ".17g"))
    summary = ";".join(candidates) if candidates else "none"
    lines.append(f"# candidate_exceptional_speeds(tau_sep={format(tau_sep, '.17g')}): {summary}")
    return "\n".join(lines) + "\n"


def curve_csv(columns: dict) -> str:
    """CSV from equal-length named columns of floats."""
    names = list(columns)
    rows = zip(*(columns[name] for name in names))
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


def experiment_csv(record: dict) -> str:
    """Time series of the band energies of both experiment runs."""
    res = record["runs"]["resonant"]
    det = record["runs"]["detuned"]
    n = min(len(res["times"]), len(det["times"]))
    return curve_csv(
        {
            "time": res["times"][:n],
            "resonant_band_energy": res["band_energy"][:n],
            "detuned_band_energy": det["band_energy"][:n],
        }
    )


def load_schema(name: str) -> dict:
    """Load one of the JSON schemas shipped with the package."""
    text = resources.files("kgpair.schemas").joinpath(f"{name}.json").read_text("utf-8")
    return json.loads(text)
