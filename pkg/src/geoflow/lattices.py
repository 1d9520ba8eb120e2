"""Cocompact lattices in E3, Nil and Sol and reduction to a fundamental domain.

The Sol lattice comes from a real quadratic field K = Q(sqrt d): the ring of
integers O_K with basis (1, omega), a norm +1 unit u > 1, and the embedding

    (u^k, a) -> (k log u, a, sigma(a)),   a in O_K,

where sigma is Galois conjugation. Conjugating a translation (0, a, sigma(a))
by t = (log u, 0, 0) gives (0, u a, sigma(u a)), so t acts on the translation
sublattice through the integer matrix of multiplication by u.

Words are lists of signed, 1-based generator indices: ``[2, -1]`` is
gen2 * gen1^-1.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityError, NotAnosovError, ReductionError, UsageError
from .groups import GroupElement, Model, identity, inverse, multiply

MAX_WORD = 10_000
PELL_BOUND = 10**6


def is_squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class QuadraticField:
    """Q(sqrt d) with the integral basis (1, omega) of its ring of integers."""

    d: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or not is_squarefree(int(self.d)):
            raise UsageError(f"d must be a square-free integer >= 2, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def half_integral(self) -> bool:
        return self.d % 4 == 1

    @property
    def ring_basis(self):
        """Basis as (rational part, coefficient of sqrt d) pairs."""
        if self.half_integral:
            return ((1.0, 0.0), (0.5, 0.5))
        return ((1.0, 0.0), (0.0, 1.0))

    @property
    def omega(self) -> float:
        r = math.sqrt(self.d)
        return (1.0 + r) / 2.0 if self.half_integral else r

    @property
    def omega_conj(self) -> float:
        r = math.sqrt(self.d)
        return (1.0 - r) / 2.0 if self.half_integral else -r

    def value(self, a: int, b: int) -> float:
        return a + b * self.omega

    def conj_value(self, a: int, b: int) -> float:
        return a + b * self.omega_conj

    def norm(self, a: int, b: int) -> int:
        if self.half_integral:
            return a * a + a * b - b * b * ((self.d - 1) // 4)
        return a * a - self.d * b * b

    def mul(self, x, y):
        """Product of ring elements given in (1, omega) coordinates."""
        a, b = x
        c, e = y
        # omega^2 = d, or omega^2 = omega + (d - 1) / 4 in the half-integral case
        if self.half_integral:
            q = (self.d - 1) // 4
            return (a * c + b * e * q, a * e + b * c + b * e)
        return (a * c + b * e * self.d, a * e + b * c)

    def to_dict(self) -> dict:
        return {"d": self.d, "ring_basis": [list(v) for v in self.ring_basis]}


@dataclass(frozen=True)
class UnitElement:
    a: int
    b: int
    value: float
    norm: int

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "value": self.value, "norm": self.norm}


def _unit(field: QuadraticField, a: int, b: int) -> UnitElement:
    return UnitElement(int(a), int(b), field.value(a, b), int(field.norm(a, b)))


def fundamental_unit(field: QuadraticField, bound: int = PELL_BOUND) -> UnitElement:
    """Smallest unit > 1 of O_K, by direct search over the omega-coefficient."""
    d = field.d
    for b in range(1, bound + 1):
        if field.half_integral:
            # a + b omega = (x + b sqrt d) / 2 with x = 2a + b, x^2 - d b^2 = +-4
            for s in (-4, 4):
                x2 = d * b * b + s
                if x2 < 0:
                    continue
                x = math.isqrt(x2)
                if x * x == x2 and (x - b) % 2 == 0:
                    return _unit(field, (x - b) // 2, b)
        else:
            for s in (-1, 1):
                a2 = d * b * b + s
                a = math.isqrt(a2)
                if a * a == a2:
                    return _unit(field, a, b)
    raise CapacityError(f"no unit with omega-coefficient <= {bound} for d={d}")


@dataclass(frozen=True)
class SolData:
    field: QuadraticField
    unit: UnitElement
    unit_plus: UnitElement
    ideal_basis: tuple
    monodromy: tuple

    @property
    def log_unit(self) -> float:
        return math.log(self.unit_plus.value)

    def to_dict(self) -> dict:
        return {
            "field": self.field.to_dict(),
            "unit": self.unit.to_dict(),
            "unit_plus": self.unit_plus.to_dict(),
            "ideal_basis": [list(v) for v in self.ideal_basis],
            "monodromy": [list(r) for r in self.monodromy],
            "log_unit": self.log_unit,
        }


@dataclass(frozen=True)
class LatticeSpec:
    model: Model
    generators: tuple
    sol: Optional[SolData] = None
    name: str = ""

    @property
    def periods(self) -> np.ndarray:
        """Edge lengths of the fundamental box in domain coordinates."""
        if self.model is Model.E3:
            return np.array([1.0, 1.0, 1.0])
        if self.model is Model.NIL:
            return np.array([1.0, 2.0, 1.0])
        return np.array([self.sol.log_unit, 1.0, 1.0])

    def to_dict(self) -> dict:
        d = {
            "model": self.model.value,
            "name": self.name,
            "generators": [[g.x, g.y, g.z] for g in self.generators],
        }
        if self.sol is not None:
            d["sol"] = self.sol.to_dict()
            d["sol"]["stretch"] = monodromy_stretch(self)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def e3_cube_lattice() -> LatticeSpec:
    gens = tuple(GroupElement(Model.E3, *v) for v in ((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    return LatticeSpec(Model.E3, gens, name="e3:cube")


def nil_standard_lattice() -> LatticeSpec:
    gens = tuple(GroupElement(Model.NIL, *map(float, v)) for v in ((1, 0, 0), (0, 2, 0), (0, 0, 1)))
    return LatticeSpec(Model.NIL, gens, name="standard")


def sol_lattice(field: QuadraticField) -> LatticeSpec:
    """Lattice of the ring of integers and the smallest norm +1 unit."""
    if not isinstance(field, QuadraticField):
        field = QuadraticField(field)
    u = fundamental_unit(field)
    if u.norm == 1:
        up = u
    else:
        up = _unit(field, *field.mul((u.a, u.b), (u.a, u.b)))
    c1 = field.mul((up.a, up.b), (1, 0))
    c2 = field.mul((up.a, up.b), (0, 1))
    mono = ((c1[0], c2[0]), (c1[1], c2[1]))
    data = SolData(field, u, up, ((1, 0), (0, 1)), mono)
    gens = (
        GroupElement(Model.SOL, math.log(up.value), 0.0, 0.0),
        GroupElement(Model.SOL, 0.0, 1.0, 1.0),
        GroupElement(Model.SOL, 0.0, field.omega, field.omega_conj),
    )
    return LatticeSpec(Model.SOL, gens, data, name=f"sol:{field.d}")


def lattice_for(model, selector: Optional[str] = None) -> LatticeSpec:
    """Build a lattice from a selector: ``standard``, ``e3:cube`` or ``sol:<d>``."""
    model = Model.parse(model)
    sel = (selector or "").strip().lower()
    if model is Model.E3 and sel in ("", "e3:cube", "cube", "standard"):
        return e3_cube_lattice()
    if model is Model.NIL and sel in ("", "standard", "nil:standard"):
        return nil_standard_lattice()
    if model is Model.SOL:
        if sel in ("", "standard"):
            return sol_lattice(QuadraticField(2))
        if sel.startswith("sol:"):
            try:
                d = int(sel[4:])
            except ValueError:
                raise UsageError(f"bad lattice selector {selector!r}") from None
            return sol_lattice(QuadraticField(d))
    raise UsageError(f"lattice selector {selector!r} does not apply to model {model.value}")


def monodromy_matrix(spec: LatticeSpec) -> np.ndarray:
    return np.array(spec.sol.monodromy, dtype=np.int64)


def monodromy_determinant(spec: LatticeSpec) -> int:
    (a, b), (c, d) = spec.sol.monodromy
    return a * d - b * c


def monodromy_stretch(spec: LatticeSpec) -> float:
    """log of the expanding eigenvalue of the monodromy matrix."""
    if spec.model is not Model.SOL or spec.sol is None:
        raise UsageError("monodromy is defined for Sol lattices only")
    (a, _), (_, d) = spec.sol.monodromy
    tr = a + d
    if abs(tr) <= 2:
        raise NotAnosovError(f"trace {tr} is not hyperbolic")
    det = monodromy_determinant(spec)
    lam = (abs(tr) + math.sqrt(tr * tr - 4 * det)) / 2.0
    return math.log(lam)


def _gen_power(spec: LatticeSpec, gen: int, k: int) -> GroupElement:
    """gen^k by binary powering, so long runs do not accumulate rounding."""
    g = spec.generators[abs(gen) - 1]
    if (gen < 0) != (k < 0):
        g = inverse(g)
    k = abs(k)
    out = identity(spec.model)
    while k:
        if k & 1:
            out = multiply(out, g)
        g = multiply(g, g)
        k >>= 1
    return out


def evaluate_word(spec: LatticeSpec, word) -> GroupElement:
    out = identity(spec.model)
    for letter, run in itertools.groupby(word):
        out = multiply(out, _gen_power(spec, letter, len(list(run))))
    return out


def _power(k: int, gen: int) -> list:
    return [gen if k > 0 else -gen] * abs(k)


def _wrap(v: float, period: float):
    """(k, r) with v = k period + r and r in [0, period)."""
    k = math.floor(v / period)
    r = v - k * period
    if r >= period:
        r -= period
        k += 1
    if r < 0:
        r += period
        k -= 1
    if r >= period:  # r rounded up to the period; the true value is a hair below it
        r = 0.0
        k += 1
    return k, r


def _sol_basis(spec: LatticeSpec) -> np.ndarray:
    f = spec.sol.field
    return np.array([[1.0, f.omega], [1.0, f.omega_conj]])


def domain_coordinates(spec: LatticeSpec, g) -> np.ndarray:
    """Coordinates in which the fundamental domain is the unit box [0, 1)^3.

    Accepts a GroupElement or an array (..., 3) of coordinates.
    """
    a = g.as_array() if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    if spec.model is Model.SOL:
        s = np.linalg.solve(_sol_basis(spec), a[..., 1:].T).T if a.ndim > 1 else np.linalg.solve(_sol_basis(spec), a[1:])
        return np.concatenate([a[..., :1] / spec.sol.log_unit, s], axis=-1)
    return a / spec.periods


def in_domain(spec: LatticeSpec, g) -> bool:
    c = domain_coordinates(spec, g)
    return bool(np.all((c >= 0.0) & (c < 1.0)))


def reduce_coords(spec: LatticeSpec, g) -> tuple:
    """Reduced coordinates and the lattice element as integer exponents.

    Returns ``(x, y, z), exps`` where exps are generator exponents applied in
    the order documented by :func:`reduce`.
    """
    x, y, z = (g.x, g.y, g.z) if isinstance(g, GroupElement) else map(float, g)
    if spec.model is Model.E3:
        a, x = _wrap(x, 1.0)
        b, y = _wrap(y, 1.0)
        c, z = _wrap(z, 1.0)
        return (x, y, z), (-a, -b, -c)
    if spec.model is Model.NIL:
        ka, xr = _wrap(x, 1.0)
        kb, yr = _wrap(y, 2.0)
        a, b = -ka, -kb
        # (a, 2b, ab) * (x, y, z)
        zz = a * b + z + 0.5 * (a * y - x * 2 * b)
        kc, zr = _wrap(zz, 1.0)
        return (xr, yr, zr), (a, b, -kc)
    L = spec.sol.log_unit
    k, xr = _wrap(x, L)
    while xr / L >= 1.0:
        xr = math.nextafter(xr, 0.0)
    up = spec.sol.unit_plus.value
    y1 = y * up ** (-k)
    z1 = z * up ** k
    B = _sol_basis(spec)
    s = np.linalg.solve(B, [y1, z1])
    k1, r1 = _wrap(float(s[0]), 1.0)
    k2, r2 = _wrap(float(s[1]), 1.0)
    yr = r1 + r2 * B[0, 1]
    zr = r1 + r2 * B[1, 1]
    # the representative is stored as (y, z); nudge it by a few ulps if rounding
    # put its lattice coordinates just outside the half-open unit square
    nudge = np.finfo(float).eps
    for _ in range(8):
        c = np.linalg.solve(B, [yr, zr])
        if np.all((c >= 0.0) & (c < 1.0)):
            break
        r1 += nudge if c[0] < 0 else (-nudge if c[0] >= 1 else 0.0)
        r2 += nudge if c[1] < 0 else (-nudge if c[1] >= 1 else 0.0)
        yr = r1 + r2 * B[0, 1]
        zr = r1 + r2 * B[1, 1]
        nudge *= 4
    return (xr, yr, zr), (-k, -k1, -k2)


def reduce(spec: LatticeSpec, g: GroupElement):
    """Representative of N g in the fundamental domain, and the word w with w g = g'.

    E3 and Nil use the box spanned by the generators; Sol uses 0 <= x < log u
    and the unit parallelogram of the translation sublattice.
    """
    if g.model is not spec.model:
        raise UsageError(f"model mismatch: {g.model.value} vs {spec.model.value}")
    coords, exps = reduce_coords(spec, g)
    if sum(abs(e) for e in exps) > MAX_WORD:
        raise ReductionError(f"reduction needs more than {MAX_WORD} generator applications")
    if spec.model is Model.E3:
        word = _power(exps[0], 1) + _power(exps[1], 2) + _power(exps[2], 3)
    elif spec.model is Model.NIL:
        a, b, c = exps
        word = _power(c, 3) + _power(a, 1) + _power(b, 2)
    else:
        k, m1, m2 = exps
        word = _power(m1, 2) + _power(m2, 3) + _power(k, 1)
    return GroupElement(spec.model, *coords), word


def lattice_element(spec: LatticeSpec, exps) -> GroupElement:
    """The element whose left action is recorded by ``exps`` from :func:`reduce_coords`."""
    if spec.model is Model.E3:
        return GroupElement(Model.E3, *map(float, exps))
    if spec.model is Model.NIL:
        a, b, c = exps
        return GroupElement(Model.NIL, float(a), 2.0 * b, float(a * b + c))
    k, m1, m2 = exps
    f = spec.sol.field
    return GroupElement(Model.SOL, k * spec.sol.log_unit, m1 + m2 * f.omega, m1 + m2 * f.omega_conj)


def reduce_array(spec: LatticeSpec, g) -> np.ndarray:
    """Vectorised reduction of coordinates (..., 3); no words, no edge clean-up."""
    g = np.asarray(g, dtype=float)
    x, y, z = g[..., 0], g[..., 1], g[..., 2]
    if spec.model is Model.E3:
        return g - np.floor(g)
    if spec.model is Model.NIL:
        a = -np.floor(x)
        b = -np.floor(y / 2.0)
        zz = a * b + z + 0.5 * (a * y - x * 2.0 * b)
        return np.stack([x + a, y + 2.0 * b, zz - np.floor(zz)], axis=-1)
    L = spec.sol.log_unit
    k = np.floor(x / L)
    y1 = y * np.exp(-k * L)
    z1 = z * np.exp(k * L)
    Binv = np.linalg.inv(_sol_basis(spec))
    s1 = Binv[0, 0] * y1 + Binv[0, 1] * z1
    s2 = Binv[1, 0] * y1 + Binv[1, 1] * z1
    s1 -= np.floor(s1)
    s2 -= np.floor(s2)
    B = _sol_basis(spec)
    return np.stack([x - k * L, s1 + s2 * B[0, 1], s1 + s2 * B[1, 1]], axis=-1)


def min_displacement(spec: LatticeSpec, max_len: int = 4) -> float:
    """Smallest coordinate norm of a non-identity element over reduced words of length <= max_len."""
    letters = [i for k in range(1, len(spec.generators) + 1) for i in (k, -k)]
    best = math.inf
    for n in range(1, max_len + 1):
        for word in itertools.product(letters, repeat=n):
            if any(word[i] == -word[i + 1] for i in range(n - 1)):
                continue
            v = evaluate_word(spec, word).as_array()
            r = float(np.linalg.norm(v))
            if r > 1e-9:
                best = min(best, r)
    return best


def sol_closure_residual(spec: LatticeSpec) -> float:
    """Max distance from t tau t^-1 to the integer span of the translations (monodromy columns)."""
    t = spec.generators[0]
    B = _sol_basis(spec)
    M = monodromy_matrix(spec)
    worst = 0.0
    for j, tau in enumerate(spec.generators[1:]):
        c = multiply(multiply(t, tau), inverse(t))
        s = np.linalg.solve(B, [c.y, c.z])
        worst = max(worst, abs(c.x), float(np.max(np.abs(s - M[:, j]))))
    return worst
