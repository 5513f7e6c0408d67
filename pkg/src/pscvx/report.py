"""Per-chart checking pipeline and the report record.

Verdict wording is deliberate: sampling cannot certify the universally
quantified hypotheses, so success is reported as ``conditions-verified``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import domain as dm
from .barrier import compute_lambda, shrink_for_bound
from .discs import RationalProbe, monomial_corpus, replay_witness, witness_non_domain
from .edges import EdgeType, cone_convexity, edge_type, power_straighten, tangent_cone
from .errors import PscvxError
from .hermitian import levi_form, min_eigenpairs, restrict_to_kernel, wirtinger_gradient
from .psh import verify_psh

VERIFIED = "conditions-verified"
COUNTEREXAMPLE = "counterexample"
INCONCLUSIVE = "inconclusive"

EXIT_CODES = {VERIFIED: 0, COUNTEREXAMPLE: 2, INCONCLUSIVE: 3}
POINT_CLOUD_CAP = 256


@dataclass(frozen=True)
class CheckOptions:
    samples: int = 10_000
    tol: float = 1e-6
    eig_tol: float = 1e-8
    alpha: float | None = None  # power-map exponent; default makes the image a right angle
    edge_samples: int = 32
    seed: int = 0
    witness: bool = True


def thread_count():
    try:
        n = int(os.environ.get("PSCVX_THREADS", "0"))
    except ValueError:
        n = 0
    return max(1, n or (os.cpu_count() or 1))


def _err(exc):
    return {"error": type(exc).__name__, "code": getattr(exc, "code", "error"), "message": str(exc)}


# ---------------------------------------------------------------------------
# stages

def classify_chart(spec, ci, opts):
    """Histogram of boundary classes over chart samples plus a capped point cloud."""
    ch = spec.charts[ci]
    y, x = ch.sample_boundary(opts.samples, opts.seed, regular_only=False)
    idx, _ = ch.active_piece(y[:, :-1])
    hist = {"regular": int(np.sum(idx >= 0)), "edge": 0, "exceptional": 0, "unclassified": 0}
    cloud = [{"point": x[i], "class": "regular"} for i in range(min(len(x), POINT_CLOUD_CAP)) if idx[i] >= 0]
    for i in np.flatnonzero(idx < 0):
        try:
            kind = dm.classify_boundary_point(spec, x[i]).kind
        except PscvxError:
            kind = "unclassified"
        hist[kind] = hist.get(kind, 0) + 1
        if len(cloud) < POINT_CLOUD_CAP:
            cloud.append({"point": x[i], "class": kind})
    for ei in range(len(ch.edges)):
        _, _, xe = ch.sample_edge(ei, opts.edge_samples, opts.seed)
        hist["edge"] += len(xe)
        cloud.extend({"point": p, "class": "edge"} for p in xe[: max(0, POINT_CLOUD_CAP - len(cloud))])
    return {"histogram": hist, "points": cloud}


def levi_sweep(spec, ci, opts):
    """Smallest eigenvalue of the Levi form restricted to the complex tangent space."""
    ch = spec.charts[ci]
    _, x = ch.sample_boundary(opts.samples, opts.seed, regular_only=True)
    if len(x) == 0:
        return {"count": 0, "min_eigenvalue": None, "psd": True, "witness": None}
    jet = ch.ambient_rho_jet(x)
    d = wirtinger_gradient(jet)
    form = restrict_to_kernel(levi_form(jet), d)
    w, u = min_eigenpairs(form)
    k = int(np.argmin(w))
    psd = bool(w[k] >= -opts.eig_tol)
    out = {"count": int(len(x)), "min_eigenvalue": float(w[k]), "psd": psd, "witness": None}
    if not psd:
        from .hermitian import kernel_basis

        xi = kernel_basis(d[k]) @ u[k]
        out["witness"] = {"point": x[k], "xi": xi, "eigenvalue": float(w[k])}
    return out


def _default_alpha(opening):
    # image opening pi/2: any alpha with alpha * opening < pi works; this one is
    # 1/3 for the 3 pi / 2 polygon vertex
    return min(1.0, 0.5 * math.pi / opening)


def edge_sweep(spec, ci, opts):
    """Type every sampled edge point; cone test for real edges, power map for complex ones."""
    ch = spec.charts[ci]
    records = []
    images = []
    for ei in range(len(ch.edges)):
        _, _, xe = ch.sample_edge(ei, opts.edge_samples, opts.seed)
        rec = {"edge": ei, "samples": int(len(xe)), "kinds": {}, "jump_min": None,
               "convex": True, "worst": 0.0, "nonconvex_point": None, "angle_max": 0.0,
               "angle_min": None, "power_map": None}
        complex_pt = None
        for p in xe:
            try:
                et = edge_type(spec, (ci, ei), p)
            except PscvxError as exc:
                rec.setdefault("errors", []).append(_err(exc))
                continue
            rec["kinds"][et.kind] = rec["kinds"].get(et.kind, 0) + 1
            rec["angle_max"] = max(rec["angle_max"], et.angle)
            rec["angle_min"] = et.angle if rec["angle_min"] is None else min(rec["angle_min"], et.angle)
            if et.kind == EdgeType.COMPLEX:
                complex_pt = p if complex_pt is None else complex_pt
                continue
            cone = tangent_cone(spec, p)
            res = cone_convexity(cone)
            rec["jump_min"] = cone.jump if rec["jump_min"] is None else min(rec["jump_min"], cone.jump)
            if not res.convex and res.worst > rec["worst"]:
                rec["convex"] = False
                rec["worst"] = res.worst
                rec["nonconvex_point"] = p
        if complex_pt is not None:
            rec["power_map"] = _straighten(spec, ci, ei, complex_pt, opts)
            if rec["power_map"].get("image_spec") is not None:
                images.append(rec["power_map"].pop("image_spec"))
        records.append(rec)
    return records, images


def _straighten(spec, ci, ei, p, opts):
    try:
        pm = power_straighten(spec, (ci, ei), 1.0, a=p)
        alpha = opts.alpha if opts.alpha is not None else _default_alpha(pm.opening)
        pm = power_straighten(spec, (ci, ei), alpha, a=p)
    except PscvxError as exc:
        return {"ok": False, **_err(exc)}
    img = pm.image_spec()
    vertex = pm.forward(pm.base)
    cone = tangent_cone(img, vertex)
    res = cone_convexity(cone)
    # the image model must agree with the true image near the vertex
    _, xb = img.charts[0].sample_boundary(256, opts.seed, regular_only=True)
    inner = xb + 1e-3 * img.charts[0].R[-1]
    agree = float(np.mean(pm.image_margin(inner) > 0))
    return {"ok": bool(res.convex), "alpha": alpha, "opening": pm.opening,
            "image_opening": pm.image_opening, "image_convex": bool(res.convex),
            "image_jump": cone.jump, "model_agreement": agree,
            "image_spec": img if res.convex else None}


def barrier_stage(spec, ci, opts):
    collar = shrink_for_bound(spec, ci, samples=opts.samples, seed=opts.seed)
    lam = compute_lambda(collar)
    return collar, lam, {"shrink_factor": collar.factor, "halvings": collar.halvings, "lambda": lam,
                         "sup_levi_norm": collar.sup_levi_norm, "sup_product": collar.sup_product,
                         "samples": collar.count}


def _psh_record(v):
    return {"verified": v.verified, "stage": v.stage, "levi_min": v.levi_min, "jump_min": v.jump_min,
            "margin_min": v.margin_min, "counts": v.counts, "witness": v.witness}


def _witness_record(spec, w):
    rec = {"status": w.status, "reason": w.reason, "point": w.point, "edge_kind": w.edge_kind}
    if w.disc is not None:
        d = w.disc
        rec["disc"] = {"base": d.base, "v": d.v, "zeta": d.zeta, "eps": d.eps, "mu": d.mu}
        ok, m, c = replay_witness(spec, d)
        rec["replay"] = {"ok": ok, "boundary_margin": m, "center_margin": c}
    if w.family is not None:
        rec["family"] = {"count": w.family.count, "translations": w.family.translations,
                         "margins": w.family.margins}
        rec["direction_margin"] = w.direction_margin
        rec["coherence"] = w.coherence
        rec["probes"] = w.probes
    return rec


def _probe_corpus(spec):
    probes = list(monomial_corpus(spec.dimension))
    for k in range(spec.dimension):
        for pole in (1.2, 1.5, 2.0, 3.0):
            rp = RationalProbe(k, complex(pole))
            if rp.avoids(spec):
                probes.append(rp)
                break
    return probes


# ---------------------------------------------------------------------------
# orchestration

def check_chart(spec, ci, opts):
    rec = {"chart": ci, "name": spec.charts[ci].name}
    certs = []
    failures = []
    try:
        rec["classification"] = classify_chart(spec, ci, opts)
    except PscvxError as exc:
        rec["classification"] = _err(exc)
        failures.append("classification")
    lv = levi_sweep(spec, ci, opts)
    rec["levi"] = lv
    if not lv["psd"]:
        certs.append("levi")
    edges, images = edge_sweep(spec, ci, opts)
    rec["edges"] = edges
    nonconvex = [e for e in edges if not e["convex"]]
    if nonconvex:
        certs.append("cone")
    for e in edges:
        if e["power_map"] is not None and not e["power_map"]["ok"]:
            failures.append("power_map")

    # barrier and psh: on the straightened image when a complex edge was mapped
    targets = [(spec, ci, "chart")] if not images else [(img, 0, "power_image") for img in images]
    rec["barrier"] = []
    rec["psh"] = []
    if not certs:
        for sp, k, label in targets:
            try:
                collar, lam, brec = barrier_stage(sp, k, opts)
                brec["on"] = label
                rec["barrier"].append(brec)
                v = verify_psh(sp, k, collar, lam, tol=opts.tol, eig_tol=opts.eig_tol)
                rec["psh"].append({"on": label, **_psh_record(v)})
                if not v.verified:
                    failures.append("psh")
            except PscvxError as exc:
                rec["barrier"].append({"on": label, **_err(exc)})
                failures.append("barrier")

    rec["witnesses"] = []
    if nonconvex and opts.witness:
        corpus = _probe_corpus(spec)
        for e in nonconvex:
            try:
                w = witness_non_domain(spec, e["nonconvex_point"], probes=corpus)
                rec["witnesses"].append(_witness_record(spec, w))
            except PscvxError as exc:
                rec["witnesses"].append(_err(exc))
    if certs:
        verdict = COUNTEREXAMPLE
    elif failures:
        verdict = INCONCLUSIVE
    else:
        verdict = VERIFIED
    rec["certificates"] = certs
    rec["failures"] = failures
    rec["verdict"] = verdict
    return rec


def overall(verdicts):
    if any(v == COUNTEREXAMPLE for v in verdicts):
        return COUNTEREXAMPLE
    if verdicts and all(v == VERIFIED for v in verdicts):
        return VERIFIED
    return INCONCLUSIVE


def run_check(spec, options=None):
    """Full pipeline over all charts; returns the report as a plain dict."""
    opts = options or CheckOptions()
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        charts = list(pool.map(lambda ci: check_chart(spec, ci, opts), range(len(spec.charts))))
    verdict = overall([c["verdict"] for c in charts])
    return {
        "spec": spec.name,
        "dimension": spec.dimension,
        "options": {"samples": opts.samples, "tol": opts.tol, "eig_tol": opts.eig_tol,
                    "alpha": opts.alpha, "seed": opts.seed},
        "charts": charts,
        "verdict": verdict,
        "exit_code": EXIT_CODES[verdict],
    }
