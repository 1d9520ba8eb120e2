"""Group laws, exponential maps, coframes and coadjoint actions of E3, Nil and Sol.

All three groups are realised on R^3 with global coordinates (x, y, z) and the
identity at the origin:

* E3  : (x, y, z) * (x', y', z') = (x + x', y + y', z + z')
* Nil : (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + (x y' - x' y) / 2)
* Sol : (x, y, z) * (x', y', z') = (x + x', e^x y' + y, e^-x z' + z)

Covectors are left-trivialised: p = pa alpha + pb beta + pg gamma in the
left-invariant coframe

* E3  : alpha = dx, beta = dy, gamma = dz
* Nil : alpha = dx, beta = dy, gamma = dz - (x dy - y dx) / 2
* Sol : alpha = dx, beta = e^-x dy, gamma = e^x dz

and the metric is sum(sigma ⊗ sigma), so the coframe is orthonormal.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

__all__ = [
    "Model",
    "GroupElement",
    "AlgebraVector",
    "Covector",
    "identity",
    "multiply",
    "inverse",
    "commutator",
    "exponential",
    "coadjoint",
    "coadjoint_array",
    "coordinate_velocity",
    "to_canonical",
    "from_canonical",
]

# below this |t * cX| the Sol exponential switches to its Taylor branch
_SOL_SERIES_CUTOFF = 1e-6


class Model(str, enum.Enum):
    E3 = "e3"
    NIL = "nil"
    SOL = "sol"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, Model):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise UsageError(f"unknown model {value!r}; expected one of e3, nil, sol") from None

    @property
    def code(self) -> int:
        return _MODEL_CODES[self]


_MODEL_CODES = {Model.E3: 0, Model.NIL: 1, Model.SOL: 2}


@dataclass(frozen=True)
class GroupElement:
    model: Model
    x: float
    y: float
    z: float

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, model, a) -> "GroupElement":
        return cls(model, float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class AlgebraVector:
    """Components in the basis (X, Y, Z) dual to the coframe at the identity."""

    model: Model
    cx: float
    cy: float
    cz: float

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz], dtype=float)


@dataclass(frozen=True)
class Covector:
    model: Model
    pa: float
    pb: float
    pg: float

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))

    def as_array(self) -> np.ndarray:
        return np.array([self.pa, self.pb, self.pg], dtype=float)

    @classmethod
    def from_array(cls, model, a) -> "Covector":
        return cls(model, float(a[0]), float(a[1]), float(a[2]))


def _same_model(a, b) -> Model:
    if a.model is not b.model:
        raise UsageError(f"model mismatch: {a.model.value} vs {b.model.value}")
    return a.model


def identity(model) -> GroupElement:
    return GroupElement(Model.parse(model), 0.0, 0.0, 0.0)


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    model = _same_model(a, b)
    if model is Model.E3:
        return GroupElement(model, a.x + b.x, a.y + b.y, a.z + b.z)
    if model is Model.NIL:
        return GroupElement(model, a.x + b.x, a.y + b.y, a.z + b.z + 0.5 * (a.x * b.y - b.x * a.y))
    return GroupElement(model, a.x + b.x, math.exp(a.x) * b.y + a.y, math.exp(-a.x) * b.z + a.z)


def inverse(a: GroupElement) -> GroupElement:
    if a.model is Model.SOL:
        return GroupElement(a.model, -a.x, -math.exp(-a.x) * a.y, -math.exp(a.x) * a.z)
    return GroupElement(a.model, -a.x, -a.y, -a.z)


def commutator(a: GroupElement, b: GroupElement) -> GroupElement:
    """a b a^-1 b^-1."""
    return multiply(multiply(a, b), multiply(inverse(a), inverse(b)))


def exponential(v: AlgebraVector, t: float = 1.0) -> GroupElement:
    """exp(t v); a one-parameter subgroup in t."""
    model = v.model
    if model is not Model.SOL:
        return GroupElement(model, t * v.cx, t * v.cy, t * v.cz)
    a = t * v.cx
    if abs(a) < _SOL_SERIES_CUTOFF:
        a2 = a * a
        fy = t * (1.0 + a / 2.0 + a2 / 6.0 + a2 * a / 24.0)
        fz = t * (1.0 - a / 2.0 + a2 / 6.0 - a2 * a / 24.0)
    else:
        fy = math.expm1(a) / v.cx
        fz = -math.expm1(-a) / v.cx
    return GroupElement(model, a, v.cy * fy, v.cz * fz)


def coadjoint(h: GroupElement, p: Covector) -> Covector:
    """Momentum map of the left action, h -> Ad*_{h^-1} acting on body momenta.

    Satisfies coadjoint(h1 * h2, p) == coadjoint(h1, coadjoint(h2, p)) and is
    constant along every geodesic: coadjoint(g(t), p(t)) is the conserved
    spatial momentum.
    """
    _same_model(h, p)
    out = coadjoint_array(h.model, h.as_array(), p.as_array())
    return Covector.from_array(h.model, out)


def coadjoint_array(model, g, p) -> np.ndarray:
    """Vectorised coadjoint over trailing axis of length 3."""
    model = Model.parse(model)
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    x, y, z = g[..., 0], g[..., 1], g[..., 2]
    pa, pb, pg = p[..., 0], p[..., 1], p[..., 2]
    if model is Model.E3:
        return p.copy()
    if model is Model.NIL:
        return np.stack([pa + y * pg, pb - x * pg, pg], axis=-1)
    ex, emx = np.exp(x), np.exp(-x)
    return np.stack([pa + y * emx * pb - z * ex * pg, emx * pb, ex * pg], axis=-1)


def coordinate_velocity(model, g, v) -> np.ndarray:
    """dg/dt in (x, y, z) coordinates for body velocity v (left translation dL_g v)."""
    model = Model.parse(model)
    g = np.asarray(g, dtype=float)
    v = np.asarray(v, dtype=float)
    if model is Model.E3:
        return v.copy()
    x, y = g[..., 0], g[..., 1]
    va, vb, vg = v[..., 0], v[..., 1], v[..., 2]
    if model is Model.NIL:
        return np.stack([va, vb, vg + 0.5 * (x * vb - y * va)], axis=-1)
    return np.stack([va, np.exp(x) * vb, np.exp(-x) * vg], axis=-1)


def to_canonical(model, g, p) -> np.ndarray:
    """Canonical momenta (px, py, pz) of the left-trivialised covector p at g."""
    model = Model.parse(model)
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    if model is Model.E3:
        return p.copy()
    x, y = g[..., 0], g[..., 1]
    pa, pb, pg = p[..., 0], p[..., 1], p[..., 2]
    if model is Model.NIL:
        return np.stack([pa + 0.5 * y * pg, pb - 0.5 * x * pg, pg], axis=-1)
    return np.stack([pa, np.exp(-x) * pb, np.exp(x) * pg], axis=-1)


def from_canonical(model, g, P) -> np.ndarray:
    """Inverse of :func:`to_canonical`."""
    model = Model.parse(model)
    g = np.asarray(g, dtype=float)
    P = np.asarray(P, dtype=float)
    if model is Model.E3:
        return P.copy()
    x, y = g[..., 0], g[..., 1]
    px, py, pz = P[..., 0], P[..., 1], P[..., 2]
    if model is Model.NIL:
        return np.stack([px - 0.5 * y * pz, py + 0.5 * x * pz, pz], axis=-1)
    return np.stack([px, np.exp(x) * py, np.exp(-x) * pz], axis=-1)
