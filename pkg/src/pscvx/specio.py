"""JSON domain-spec files.

Schema::

    {"name": str?, "dimension": N,
     "global_region": [[expr, ...], ...]?,        # union of intersections of {expr < 0}
     "charts": [{"center": [2N], "frame": [[2N] x 2N],
                 "box": {"radii": [2N-1], "interval": [lo, hi]},
                 "pieces": [{"h": expr, "region": [{"expr": expr, "sign": +1|-1}]}],
                 "edges": [{"pieces": [i, j], "plus_piece": i,
                            "locus": [expr x (2N-1)], "params": [[lo, hi] x (2N-2)]}],
                 "exceptional": [{"locus": [...], "params": [...]}],
                 "defining_function": expr?, "name": str?}]}

Piece and locus expressions use chart or parameter variables; global and
defining-function expressions use ambient variables.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .domain import (
    EdgeDecl,
    ExceptionalDecl,
    GraphDomainSpec,
    Locus,
    Piece,
    make_chart,
    validate_spec,
)
from .errors import ExprError, SchemaError, SpecInvariantError, SpecIoError
from .expr import parse, to_text


def _req(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError(f"missing required key {key!r}", path)
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"{key!r} has the wrong type", f"{path}.{key}")
    return val


def _numbers(seq, path, length=None):
    if not isinstance(seq, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                             for v in seq):
        raise SchemaError("expected a list of numbers", path)
    if length is not None and len(seq) != length:
        raise SchemaError(f"expected {length} numbers, got {len(seq)}", path)
    return [float(v) for v in seq]


def _expr(text, nvars, path):
    if not isinstance(text, str):
        raise SchemaError("expected an expression string", path)
    try:
        return parse(text, nvars)
    except ExprError as exc:
        raise type(exc)(f"{path}: {exc.message}", exc.offset, text) from None


def _locus(obj, n, path, dim_max, exact=None):
    exprs = _req(obj, "locus", path, list)
    params = _req(obj, "params", path, list)
    bounds = []
    for i, p in enumerate(params):
        lo_hi = _numbers(p, f"{path}.params[{i}]", 2)
        bounds.append(tuple(lo_hi))
    d = len(bounds)
    if exact is not None and d != exact:
        raise SchemaError(f"locus needs {exact} parameters, got {d}", f"{path}.params")
    if d > dim_max:
        raise SchemaError(f"locus has {d} parameters, at most {dim_max} allowed", f"{path}.params")
    if len(exprs) != n - 1:
        raise SchemaError(f"locus needs {n - 1} expressions, got {len(exprs)}", f"{path}.locus")
    return Locus(tuple(_expr(e, d if d else 0, f"{path}.locus[{i}]") for i, e in enumerate(exprs)),
                 tuple(bounds))


def spec_from_dict(data):
    """Build and validate a spec from parsed JSON; errors name the offending path."""
    dim = _req(data, "dimension", "$")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError("dimension must be a positive integer", "$.dimension")
    n = 2 * dim
    charts_raw = _req(data, "charts", "$", list)
    if not charts_raw:
        raise SchemaError("at least one chart is required", "$.charts")
    charts = []
    for ci, raw in enumerate(charts_raw):
        path = f"$.charts[{ci}]"
        center = _numbers(_req(raw, "center", path), f"{path}.center", n)
        frame_raw = _req(raw, "frame", path, list)
        if len(frame_raw) != n:
            raise SchemaError(f"frame needs {n} rows", f"{path}.frame")
        frame = [_numbers(row, f"{path}.frame[{i}]", n) for i, row in enumerate(frame_raw)]
        box = _req(raw, "box", path, dict)
        radii = _numbers(_req(box, "radii", f"{path}.box"), f"{path}.box.radii", n - 1)
        interval = _numbers(_req(box, "interval", f"{path}.box"), f"{path}.box.interval", 2)
        pieces_raw = _req(raw, "pieces", path, list)
        if not pieces_raw:
            raise SchemaError("chart needs at least one piece", f"{path}.pieces")
        pieces = []
        for pi, praw in enumerate(pieces_raw):
            ppath = f"{path}.pieces[{pi}]"
            h = _expr(_req(praw, "h", ppath), n - 1, f"{ppath}.h")
            region = []
            for ri, rraw in enumerate(praw.get("region", [])):
                rpath = f"{ppath}.region[{ri}]"
                sign = _req(rraw, "sign", rpath)
                if sign not in (1, -1) or isinstance(sign, bool):
                    raise SchemaError("sign must be 1 or -1", f"{rpath}.sign")
                region.append((_expr(_req(rraw, "expr", rpath), n - 1, f"{rpath}.expr"), int(sign)))
            pieces.append(Piece(h, tuple(region)))
        edges = []
        for ei, eraw in enumerate(raw.get("edges", [])):
            epath = f"{path}.edges[{ei}]"
            pair = _req(eraw, "pieces", epath, list)
            if len(pair) != 2 or not all(isinstance(i, int) and 0 <= i < len(pieces) for i in pair):
                raise SchemaError("edge must reference two existing piece indices", f"{epath}.pieces")
            plus = _req(eraw, "plus_piece", epath)
            if plus not in pair:
                raise SchemaError("plus_piece must be one of the edge pieces", f"{epath}.plus_piece")
            edges.append(EdgeDecl(tuple(pair), int(plus), _locus(eraw, n, epath, n - 2, exact=n - 2),
                                  eraw.get("name", "")))
        exceptional = []
        for xi, xraw in enumerate(raw.get("exceptional", [])):
            xpath = f"{path}.exceptional[{xi}]"
            exceptional.append(ExceptionalDecl(_locus(xraw, n, xpath, max(n - 3, 0)), xraw.get("name", "")))
        dfun = raw.get("defining_function")
        charts.append(make_chart(
            center, frame, radii, interval, pieces, edges, exceptional,
            None if dfun is None else _expr(dfun, n, f"{path}.defining_function"),
            raw.get("name", ""),
        ))
    region = None
    if "global_region" in data:
        region_raw = data["global_region"]
        if not isinstance(region_raw, list) or not all(isinstance(a, list) and a for a in region_raw):
            raise SchemaError("global_region must be a list of non-empty lists", "$.global_region")
        region = tuple(tuple(_expr(e, n, f"$.global_region[{i}][{j}]") for j, e in enumerate(alt))
                       for i, alt in enumerate(region_raw))
    spec = GraphDomainSpec(dim, tuple(charts), region, name=data.get("name", ""),
                           description=data.get("description", ""))
    try:
        return validate_spec(spec)
    except SpecInvariantError as exc:
        raise SchemaError(str(exc), "$") from None


def spec_to_dict(spec):
    def locus(lc):
        return {"locus": [to_text(e) for e in lc.exprs], "params": [list(p) for p in lc.params]}

    charts = []
    for ch in spec.charts:
        d = {
            "name": ch.name,
            "center": list(ch.center),
            "frame": [list(row) for row in ch.frame],
            "box": {"radii": list(ch.radii), "interval": list(ch.interval)},
            "pieces": [{"h": to_text(p.h),
                        "region": [{"expr": to_text(e), "sign": s} for e, s in p.region]}
                       for p in ch.pieces],
            "edges": [dict(pieces=list(e.pieces), plus_piece=e.plus_piece, name=e.name, **locus(e.locus))
                      for e in ch.edges],
            "exceptional": [dict(name=x.name, **locus(x.locus)) for x in ch.exceptional],
        }
        if ch.defining_function is not None:
            d["defining_function"] = to_text(ch.defining_function)
        charts.append(d)
    out = {"name": spec.name, "description": spec.description, "dimension": spec.dimension,
           "charts": charts}
    if spec.global_region is not None:
        out["global_region"] = [[to_text(e) for e in alt] for alt in spec.global_region]
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
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
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(None if math.isnan(obj) else ("inf" if obj > 0 else "-inf"))
        return "%.17g" % obj
    return json.dumps(obj)


def dumps(obj, indent=2):
    """Deterministic JSON with floats printed to 17 significant digits."""
    return _encode(_clean(obj), indent, 0) + "\n"


def dump_spec(spec, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(spec_to_dict(spec)))


def load_spec(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SpecIoError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise SpecIoError(f"{path}: not UTF-8 at byte {exc.start}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "$") from None
    return spec_from_dict(data)
