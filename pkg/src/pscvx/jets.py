"""Second-order forward-mode jets on R^{2N}.

A :class:`Jet2` carries the value, gradient and Hessian of a real scalar field
at one point or at a batch of points (leading axes). Arithmetic propagates all
three exactly, so the Hessian of any composition is the true Hessian up to
rounding. Hessians stay exactly symmetric: every update adds either a
symmetric array or a sum ``u v^T + v u^T``.

Coordinates are interleaved: ``z_k = x[2k] + i x[2k+1]`` (0-based).
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError


def as_point(coords):
    """Validate a real point of R^{2N} (or a batch, last axis = coordinates)."""
    p = np.asarray(coords, dtype=float)
    if p.ndim == 0 or p.shape[-1] < 2 or p.shape[-1] % 2:
        raise ValueError(f"point must have an even number >= 2 of real coordinates, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    return p


def to_complex(x):
    """Interleaved real coordinates -> complex vector(s)."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def to_real(z):
    """Complex vector(s) -> interleaved real coordinates."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complex_structure(n):
    """Matrix of multiplication by i on R^n: (x_{2k}, x_{2k+1}) -> (-x_{2k+1}, x_{2k})."""
    if n % 2:
        raise ValueError("real dimension must be even")
    j = np.zeros((n, n))
    for k in range(n // 2):
        j[2 * k + 1, 2 * k] = 1.0
        j[2 * k, 2 * k + 1] = -1.0
    return j


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet2:
    __slots__ = ("value", "gradient", "hessian")

    def __init__(self, value, gradient, hessian):
        value = np.asarray(value, dtype=float)
        gradient = np.asarray(gradient, dtype=float)
        hessian = np.asarray(hessian, dtype=float)
        if gradient.shape != value.shape + gradient.shape[-1:] or hessian.shape != gradient.shape + gradient.shape[-1:]:
            raise ValueError(
                f"inconsistent jet shapes {value.shape}, {gradient.shape}, {hessian.shape}")
        for arr in (value, gradient, hessian):
            arr.setflags(write=False)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "gradient", gradient)
        object.__setattr__(self, "hessian", hessian)

    def __setattr__(self, name, val):
        raise AttributeError("Jet2 is immutable")

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, c, n, batch_shape=()):
        c = np.broadcast_to(np.asarray(c, dtype=float), batch_shape)
        return cls(c.copy(), np.zeros(batch_shape + (n,)), np.zeros(batch_shape + (n, n)))

    @classmethod
    def coordinate(cls, points, i):
        """Jet of the coordinate function ``x -> x[i]`` at ``points``."""
        p = np.asarray(points, dtype=float)
        n = p.shape[-1]
        batch = p.shape[:-1]
        g = np.zeros(batch + (n,))
        g[..., i] = 1.0
        return cls(p[..., i].copy(), g, np.zeros(batch + (n, n)))

    @property
    def dim(self):
        return self.gradient.shape[-1]

    @property
    def batch_shape(self):
        return self.value.shape

    def __getitem__(self, idx):
        return Jet2(self.value[idx], self.gradient[idx], self.hessian[idx])

    def __repr__(self):
        return f"Jet2(value={self.value!r}, gradient={self.gradient!r}, hessian=...)"

    # arithmetic -------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.dim, self.batch_shape)

    def __add__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value + other, self.gradient, self.hessian)
        return Jet2(self.value + other.value, self.gradient + other.gradient, self.hessian + other.hessian)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.gradient, -self.hessian)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet2) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=float)
            return Jet2(self.value * c, self.gradient * c[..., None], self.hessian * c[..., None, None])
        a, b = self, other
        return Jet2(
            a.value * b.value,
            a.value[..., None] * b.gradient + b.value[..., None] * a.gradient,
            a.value[..., None, None] * b.hessian
            + b.value[..., None, None] * a.hessian
            + (_outer(a.gradient, b.gradient) + _outer(b.gradient, a.gradient)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def chain(self, f, f1, f2):
        """Compose with a scalar function given its value and two derivatives at ``self.value``."""
        f = np.asarray(f, dtype=float)
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        return Jet2(
            f,
            f1[..., None] * self.gradient,
            f1[..., None, None] * self.hessian + f2[..., None, None] * _outer(self.gradient, self.gradient),
        )

    def reciprocal(self):
        v = self.value
        if np.any(v == 0.0):
            raise DomainError("division by zero")
        return self.chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __pow__(self, k):
        if isinstance(k, Jet2) or int(k) != k:
            raise TypeError("jets support integer exponents only")
        k = int(k)
        v = self.value
        if k == 0:
            return Jet2.constant(1.0, self.dim, self.batch_shape)
        if k == 1:
            return self
        if k < 0 and np.any(v == 0.0):
            raise DomainError("negative power of zero")
        # explicit products keep integer powers exact for small k
        f = v**k
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2) if k != 2 else np.full_like(v, 2.0)
        return self.chain(f, f1, f2)

    def exp(self):
        e = np.exp(self.value)
        return self.chain(e, e, e)

    def log(self):
        v = self.value
        if np.any(v <= 0.0):
            raise DomainError("log of a non-positive value")
        return self.chain(np.log(v), 1.0 / v, -1.0 / v**2)

    def sqrt(self):
        v = self.value
        if np.any(v <= 0.0):
            raise DomainError("sqrt of a non-positive value")
        s = np.sqrt(v)
        return self.chain(s, 0.5 / s, -0.25 / (s * v))

    # coordinate changes ------------------------------------------------
    def pullback(self, r):
        """Jet of ``x -> f(R x + b)`` given this jet of ``f`` at ``R x + b``."""
        r = np.asarray(r, dtype=float)
        g = self.gradient @ r
        h = np.swapaxes(r, -1, -2) @ self.hessian @ r
        h = 0.5 * (h + np.swapaxes(h, -1, -2))
        return Jet2(self.value, g, h)


def norm2_jet(points):
    """Jet of ||x||^2."""
    p = np.asarray(points, dtype=float)
    n = p.shape[-1]
    h = np.broadcast_to(2.0 * np.eye(n), p.shape[:-1] + (n, n)).copy()
    return Jet2(np.sum(p * p, axis=-1), 2.0 * p, h)
