"""Bundled example domains in C^2 (real dimension 4).

Each fixture is a :class:`GraphDomainSpec` with one or two charts and, where
membership is needed away from the charts, an exact global description.
"""
from __future__ import annotations

import math

import numpy as np

from .domain import GraphDomainSpec, make_chart, make_edge, make_piece, validate_spec
from .expr import parse

SQ2 = math.sqrt(2.0)


def _num(v):
    return repr(float(v))


def _region(alternatives):
    return tuple(tuple(parse(e, 4) for e in alt) for alt in alternatives)


def ball():
    """Unit ball, chart at (1, 0, 0, 0) with the sphere as a graph over x2, x3, x4."""
    frame = [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0]]
    chart = make_chart(
        center=(1, 0, 0, 0), frame=frame, radii=(0.4,) * 3, interval=(-0.5, 0.5),
        pieces=[make_piece("1 - sqrt(1 - (x1^2 + x2^2 + x3^2))", nvars=3)],
        defining_function="norm2 - 1", name="pole",
    )
    return GraphDomainSpec(2, (chart,), _region([["norm2 - 1"]]), name="ball",
                           description="unit ball in C^2")


def halfspace():
    chart = make_chart(center=(0, 0, 0, 0), frame=np.eye(4), radii=(1.0,) * 3, interval=(-1, 1),
                       pieces=[make_piece("0", nvars=3)], name="flat")
    return GraphDomainSpec(2, (chart,), _region([["-x4"]]), name="halfspace",
                           description="{Im w > 0}")


def envelope_domain():
    """{|w|^2 + (|z|^2 - 1)^2 < 2}; chart 0 sits at the non-pseudoconvex point (0, 1),
    chart 1 at the pseudoconvex point (1, i sqrt2)."""
    c0 = make_chart(
        center=(0, 0, 1, 0),
        frame=[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]],
        radii=(0.3,) * 3, interval=(-0.5, 0.5),
        pieces=[make_piece("1 - sqrt(2 - (x1^2 + x2^2 - 1)^2 - x3^2)", nvars=3)],
        name="z=0",
    )
    c1 = make_chart(
        center=(1, 0, 0, SQ2),
        frame=np.diag([1.0, 1.0, 1.0, -1.0]),
        radii=(0.3,) * 3, interval=(-0.5, 0.5),
        pieces=[make_piece("sqrt2 - sqrt(2 - ((1 + x1)^2 + x2^2 - 1)^2 - x3^2)", nvars=3)],
        name="|z|=1",
    )
    return GraphDomainSpec(2, (c0, c1), _region([["abs2(2) + (abs2(1) - 1)^2 - 2"]]),
                           name="envelope_domain",
                           description="{|w|^2 + (|z|^2 - 1)^2 < 2}")


def _two_piece(h_plus, h_minus, lead):
    """Pieces active on ``lead > 0`` and ``lead < 0``."""
    return [make_piece(h_plus, [(lead, 1)], nvars=3), make_piece(h_minus, [(lead, -1)], nvars=3)]


def hartogs_figure():
    """{|z|<1, |w|<1/2} u {1/2<|z|<1, |w|<1}, charted at the reflex edge point (1/2, 1/2).

    Chart coordinates: y1 = (x1 + x3)/sqrt2, y2 = x2, y3 = x4, y4 = (x1 - x3)/sqrt2.
    Near the corner the figure is {|z| > 1/2} u {|w| < 1/2}, i.e. y4 > min(h_z, h_w).
    """
    s = 1.0 / SQ2
    frame = [[s, 0, s, 0], [0, 1, 0, 0], [0, 0, 0, 1], [s, 0, -s, 0]]
    h_z = "sqrt2*(sqrt(0.25 - x2^2) - 0.5) - x1"
    h_w = "x1 - sqrt2*(sqrt(0.25 - x3^2) - 0.5)"
    e_loc = "sqrt2/2*(sqrt(0.25 - x1^2) + sqrt(0.25 - x2^2) - 1)"
    lead = "x1 - sqrt2/2*(sqrt(0.25 - x2^2) + sqrt(0.25 - x3^2) - 1)"
    r = 0.1
    edge = make_edge((0, 1), 0, [e_loc, "x1", "x2"], [(-r, r), (-r, r)], name="torus")
    chart = make_chart(center=(0.5, 0, 0.5, 0), frame=frame, radii=(r,) * 3, interval=(-0.3, 0.3),
                       pieces=_two_piece(h_z, h_w, lead), edges=[edge], name="corner")
    region = _region([["abs2(1) - 1", "abs2(2) - 0.25"],
                      ["0.25 - abs2(1)", "abs2(1) - 1", "abs2(2) - 1"]])
    return GraphDomainSpec(2, (chart,), region, name="hartogs_figure",
                           description="Hartogs figure")


def _wedge(sign, name):
    r = 0.5
    edge = make_edge((0, 1), 0, ["0", "x1", "x2"], [(-r, r), (-r, r)], name="ridge")
    hp, hm = ("x1", "-x1") if sign > 0 else ("-x1", "x1")
    chart = make_chart(center=(0, 0, 0, 0), frame=np.eye(4), radii=(r,) * 3, interval=(-1, 1),
                       pieces=_two_piece(hp, hm, "x1"), edges=[edge], name="ridge")
    if sign > 0:
        region = [["x1 - x4", "-x1 - x4"]]
    else:
        region = [["x1 - x4"], ["-x1 - x4"]]
    return GraphDomainSpec(2, (chart,), _region(region), name=name)


def convex_wedge():
    """{x4 > |x1|}: intersection of two half-spaces."""
    return _wedge(1, "convex_wedge")


def reflex_wedge():
    """{x4 > -|x1|}: union of two half-spaces."""
    return _wedge(-1, "reflex_wedge")


def sector_spec(n, k, vertex, theta_start, opening, radius=0.5, name="sector"):
    """{theta_start < arg(z_k - c) < theta_start + opening} x C^{N-1}, charted at ``vertex``.

    ``k`` is the 0-based complex coordinate and ``c`` its value at ``vertex``.
    The inward axis is the bisector; the boundary rays become
    h = cot(opening/2) |y1|.
    """
    if not 0.0 < opening < 2.0 * math.pi:
        raise ValueError("opening must lie in (0, 2 pi)")
    beta = theta_start + opening / 2
    cb, sb = math.cos(beta), math.sin(beta)
    frame = np.zeros((n, n))
    frame[0, 2 * k], frame[0, 2 * k + 1] = sb, -cb
    frame[n - 1, 2 * k], frame[n - 1, 2 * k + 1] = cb, sb
    rest = [i for i in range(n) if i not in (2 * k, 2 * k + 1)]
    for row, i in enumerate(rest, start=1):
        frame[row, i] = 1.0
    slope = 1.0 / math.tan(opening / 2)
    hp = f"{_num(slope)}*x1"
    hm = f"{_num(-slope)}*x1"
    zeros = ["0"] + [f"x{i}" for i in range(1, n - 1)]
    edge = make_edge((0, 1), 0, zeros, [(-radius, radius)] * (n - 2), name="vertex")
    chart = make_chart(center=vertex, frame=frame, radii=(radius,) * (n - 1),
                       interval=(-2 * radius, max(2 * radius, 2 * abs(slope) * radius + radius)),
                       pieces=[make_piece(hp, [("x1", 1)], nvars=n - 1),
                               make_piece(hm, [("x1", -1)], nvars=n - 1)],
                       edges=[edge], name="vertex")
    vx, vy = float(vertex[2 * k]), float(vertex[2 * k + 1])
    big_x = f"(x{2 * k + 1} - {_num(vx)})"
    big_y = f"(x{2 * k + 2} - {_num(vy)})"
    t0, t1 = theta_start, theta_start + opening
    left = f"{_num(math.sin(t0))}*{big_x} - {_num(math.cos(t0))}*{big_y}"
    right = f"{_num(math.cos(t1))}*{big_y} - {_num(math.sin(t1))}*{big_x}"
    alts = [[left], [right]] if opening > math.pi else [[left, right]]
    region = tuple(tuple(parse(e, n) for e in alt) for alt in alts)
    return GraphDomainSpec(n // 2, (chart,), region, name=name)


def sector_cross_plane(opening=1.5 * math.pi, name=None):
    """{0 < arg z1 < opening} x C, charted at the vertex z1 = 0."""
    return sector_spec(4, 0, (0.0, 0.0, 0.0, 0.0), 0.0, opening,
                       name=name or f"sector_{opening:.6g}_cross_plane")


def polygon_cross_plane():
    """Reflex polygon vertex (interior angle 3 pi / 2) times C."""
    return sector_cross_plane(1.5 * math.pi, name="polygon_cross_plane")


FIXTURES = {
    "ball": ball,
    "halfspace": halfspace,
    "envelope_domain": envelope_domain,
    "hartogs_figure": hartogs_figure,
    "convex_wedge": convex_wedge,
    "reflex_wedge": reflex_wedge,
    "polygon_cross_plane": polygon_cross_plane,
}


def fixtures():
    """All bundled fixtures, validated, keyed by name."""
    return {name: validate_spec(make()) for name, make in FIXTURES.items()}


def get(name):
    try:
        return validate_spec(FIXTURES[name]())
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
