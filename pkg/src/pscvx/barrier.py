"""Logarithmic barrier ``phi = -log(-rho) + lam |z|^2`` on a chart collar.

The collar is the part of the chart box inside the domain, shrunk about the
chart center until ``|rho| ||L rho|| <= 0.9 / 8`` at every sample. On that set
``||d rho||^2 + rho ||L rho|| >= 1/8`` (using ``||d rho|| >= 1/2``), so
``lam = 1.05 * 8 * sup ||L rho||^2`` makes the Levi form of ``phi`` positive
wherever the restricted Levi form of ``rho`` is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import halton
from .expr import evaluate
from .errors import NonNegativeRho, NotInside, OutsideBall, ShrinkBudgetExceeded
from .hermitian import (
    HermitianForm,
    covector_norm,
    hermitian_norm,
    levi_form,
    split_along_gradient,
    wirtinger_gradient,
)
from .jets import norm2_jet

BOUND = 1.0 / 8.0
SAFETY = 0.9
LAMBDA_FACTOR = 1.05
LAMBDA_FLOOR = 1e-6
MIN_DEPTH = 1e-3


@dataclass(frozen=True, eq=False)
class CollarData:
    chart_index: int
    chart: object  # the shrunk chart
    factor: float
    halvings: int
    points: np.ndarray  # (k, n) ambient collar samples
    sup_levi_norm: float
    sup_product: float  # max |rho| ||L rho|| over the samples

    @property
    def count(self):
        return self.points.shape[0]


def collar_samples(chart, count, seed=0, depth=MIN_DEPTH, tol=1e-9, max_rounds=20):
    """Low-discrepancy points of the chart box that are inside, at graph depth
    at least ``depth`` (capped at 1% of the interval) and off the piece boundaries."""
    n = chart.n
    lo, hi = chart.interval
    depth = min(depth, 0.01 * (hi - lo))
    scale = np.concatenate([chart.r, [hi - lo]])
    offset = np.concatenate([-chart.r, [lo]])
    found = []
    total = 0
    for rnd in range(max_rounds):
        u = halton(4 * count, n, seed + rnd)
        y = offset + u * np.concatenate([2.0 * scale[:-1], scale[-1:]])
        hv = chart.h(y[:, :-1])
        keep = np.isfinite(hv) & (y[:, -1] - hv >= depth)
        idx, _ = chart.active_piece(y[:, :-1], tol)
        keep &= idx >= 0
        x = chart.to_ambient(y[keep])
        if chart.defining_function is not None and len(x):
            x = x[evaluate(chart.defining_function, x, strict=False) < -depth * 1e-3]
        found.append(x)
        total += len(x)
        if total >= count:
            break
    pts = np.concatenate(found, axis=0) if found else np.zeros((0, n))
    return pts[:count]


def levi_norms(chart, x):
    """``(rho, ||L rho||)`` for the barrier defining function at ambient points."""
    j = chart.barrier_rho_jet(x)
    return j.value, hermitian_norm(levi_form(j))


def shrink_for_bound(spec, chart, budget=40, samples=10_000, seed=0):
    """Halve the chart box until the sampled ``|rho| ||L rho||`` is at most 0.9/8."""
    ci = chart
    base = spec.charts[ci]
    target = SAFETY * BOUND
    for k in range(budget + 1):
        factor = 0.5**k
        ch = base.shrunk(factor)
        pts = collar_samples(ch, samples, seed)
        if len(pts) == 0:
            continue
        rho, lnorm = levi_norms(ch, pts)
        prod = float(np.max(np.abs(rho) * lnorm))
        if prod <= target:
            return CollarData(ci, ch, factor, k, pts, float(np.max(lnorm)), prod)
    raise ShrinkBudgetExceeded(
        f"chart {ci}: |rho| ||L rho|| still above {target:g} after {budget} halvings")


def compute_lambda(collar):
    return max(LAMBDA_FACTOR * 8.0 * collar.sup_levi_norm**2, LAMBDA_FLOOR)


def condition_ii(rho_jet, lam):
    """Slack of ``lam (||d rho||^2 + rho ||L rho||) - ||L rho||^2`` (>= 0 when it holds)."""
    d = covector_norm(wirtinger_gradient(rho_jet))
    ln = hermitian_norm(levi_form(rho_jet))
    return lam * (d**2 + rho_jet.value * ln) - ln**2


def phi_from_rho(rho_jet, lam, x):
    if np.any(rho_jet.value >= 0.0):
        raise NotInside("rho >= 0: the point is not inside the domain")
    return -((-rho_jet).log()) + lam * norm2_jet(x)


def barrier_jet(spec, chart, lam, z):
    """Exact 2-jet of the barrier at ambient point(s) ``z``."""
    z = np.asarray(z, dtype=float)
    ch = spec.charts[chart] if isinstance(chart, int) else chart
    return phi_from_rho(ch.barrier_rho_jet(z), lam, z)


def barrier_levi_closed_form(rho_jet, lam):
    """``rho^-2 d rho (x) conj(d rho) - rho^-1 L rho + lam I``."""
    rho = np.asarray(rho_jet.value)
    if np.any(rho >= 0.0):
        raise NonNegativeRho("closed form needs rho < 0")
    d = wirtinger_gradient(rho_jet)
    outer = d[..., :, None] * np.conj(d)[..., None, :]
    lr = levi_form(rho_jet).matrix
    eye = np.eye(d.shape[-1])
    m = outer / (rho**2)[..., None, None] - lr / rho[..., None, None] + lam * eye
    return HermitianForm(m)


@dataclass(frozen=True, eq=False)
class LemmaSplit:
    A: np.ndarray
    B: np.ndarray
    det_a: np.ndarray
    bound: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray

    @property
    def residual(self):
        return self.det_a - self.bound


def lemma_decomposition(rho_jet, lam, zeta):
    """Split ``zeta`` along ``d rho`` and assemble the 2x2 matrices ``A`` and ``B``
    with ``L phi(a1 z1 + a2 z2) = (a1, a2)(A + B)(conj a1, conj a2)^T``.

    Works on batches (leading axes of the jet and of ``zeta`` broadcast).
    """
    rho = np.asarray(rho_jet.value)
    if np.any(rho >= 0.0):
        raise NonNegativeRho("decomposition needs rho < 0")
    d = wirtinger_gradient(rho_jet)
    z1, z2 = split_along_gradient(zeta, d)
    lr = levi_form(rho_jet)
    dn = covector_norm(d)
    ln = hermitian_norm(lr)
    n1 = np.sum(np.abs(z1) ** 2, axis=-1)
    n2 = np.sum(np.abs(z2) ** 2, axis=-1)
    l11, l12, l21, l22 = lr(z1, z1), lr(z1, z2), lr(z2, z1), lr(z2, z2)
    inv = 1.0 / rho
    shape = np.broadcast_shapes(rho.shape, n1.shape)
    a = np.zeros(shape + (2, 2), dtype=complex)
    a[..., 0, 0] = inv**2 * dn**2 * n1 - inv * l11
    a[..., 0, 1] = -inv * l12
    a[..., 1, 0] = -inv * l21
    a[..., 1, 1] = lam * n2
    b = np.zeros(shape + (2, 2), dtype=complex)
    b[..., 0, 0] = lam * n1
    b[..., 1, 1] = -inv * l22
    det_a = (a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]).real
    bound = inv**2 * (lam * dn**2 + lam * rho * ln - ln**2) * n1 * n2
    return LemmaSplit(a, b, det_a, bound, z1, z2)


@dataclass(frozen=True, eq=False)
class Barrier:
    """Barrier on one chart with a fixed ``lam``."""

    spec: object
    chart: int
    lam: float

    def jet(self, z):
        return barrier_jet(self.spec, self.chart, self.lam, z)

    def value(self, z):
        return self.jet(z).value

    def levi(self, z):
        return levi_form(self.jet(z))


def build_barrier(spec, chart, budget=40, samples=10_000, seed=0):
    collar = shrink_for_bound(spec, chart, budget, samples, seed)
    return collar, Barrier(spec, chart, compute_lambda(collar))


def exhaustion_value(barrier, x0, eps, z):
    """``max(phi(z), -log(eps - |z - x0|))`` on the ball ``|z - x0| < eps``."""
    z = np.asarray(z, dtype=float)
    dist = np.linalg.norm(z - np.asarray(x0, dtype=float), axis=-1)
    if np.any(dist >= eps):
        raise OutsideBall(f"point at distance {np.max(dist):.6g} >= eps = {eps:g}")
    phi = barrier.value(z) if callable(getattr(barrier, "value", None)) else barrier(z)
    return np.maximum(phi, -np.log(eps - dist))

