"""First integrals, momentum maps, Casimirs and a finite-difference Poisson bracket.

Evaluators act on state arrays ``u[..., 6] = (x, y, z, pa, pb, pg)`` so that a
whole trajectory is evaluated in one call; :class:`Entry` also accepts a
:class:`~geoflow.dynamics.PhaseState`.

The Nil quotient integrals are built from the momentum map J = coadjoint(g, p):

    zeta = (H, pg, -J_b / pg  (mod x_modulus), J_a / pg  (mod y_modulus))
         = (H, pg, x - pb / pg, y + pa / pg)

Left translation by a lattice element (a, b, c) shifts the two circle
components by a and b, so they descend to N \\ G for moduli dividing the
generator periods (1 and 2 for the standard lattice).
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import PhaseState, Trajectory, normalize_energy
from .errors import SingularSetError, StencilError, UsageError
from .groups import Covector, Model, coadjoint, from_canonical, to_canonical

# suites refuse to evaluate closer than this to their singular sets
SINGULAR_GUARD = 1e-12
DEFAULT_FD_STEP = 1e-5


class ConservationClass(str, enum.Enum):
    EXACT_LINEAR = "ExactLinear"
    EXACT_QUADRATIC = "ExactQuadratic"
    NUMERIC = "Numeric"


CLASS_TOLERANCE = {
    ConservationClass.EXACT_LINEAR: 1e-12,
    ConservationClass.EXACT_QUADRATIC: 1e-10,
    ConservationClass.NUMERIC: 1e-8,
}


def _as_u(state) -> np.ndarray:
    if isinstance(state, PhaseState):
        return state.as_array()
    return np.asarray(state, dtype=float)


def circle_distance(a, b, modulus):
    d = np.mod(np.abs(np.asarray(a) - np.asarray(b)), modulus)
    return np.minimum(d, modulus - d)


@dataclass(frozen=True)
class Entry:
    name: str
    lift: Callable[[np.ndarray], np.ndarray]
    cls: ConservationClass
    circle: bool = False
    modulus: Optional[float] = None

    def __post_init__(self):
        if self.circle and not (self.modulus and self.modulus > 0):
            raise UsageError(f"circle-valued entry {self.name!r} needs a positive modulus")

    def __call__(self, state):
        v = self.lift(_as_u(state))
        if self.circle:
            v = np.mod(v, self.modulus)
        return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class IntegralSuite:
    model: Model
    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise UsageError("integral names must be unique")

    @property
    def names(self):
        return [e.name for e in self.entries]

    def __getitem__(self, name) -> Entry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def __iter__(self):
        return iter(self.entries)

    def evaluate(self, state) -> dict:
        return {e.name: e(state) for e in self.entries}

    def values(self, traj: Trajectory) -> np.ndarray:
        """(n, k) array of entry values along a trajectory."""
        if traj.model is not self.model:
            raise UsageError("suite and trajectory models differ")
        cols = []
        for e in self.entries:
            try:
                cols.append(np.asarray(e(traj.states), dtype=float))
            except SingularSetError as err:
                t = float(traj.times[err.index]) if err.index is not None else None
                raise SingularSetError(f"{e.name}: singular set reached at t={t}", t=t, index=err.index) from None
        return np.stack(cols, axis=-1)

    def values_csv(self, traj: Trajectory) -> str:
        vals = self.values(traj)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + self.names)
        for t, row in zip(traj.times, vals):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        return buf.getvalue()


def _guard(values, what):
    bad = np.abs(np.atleast_1d(values)) < SINGULAR_GUARD
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SingularSetError(f"{what} vanishes: point lies on the singular set", index=i)


# scalar operations on Covector / PhaseState

def hamiltonian(p: Covector) -> float:
    return 0.5 * (p.pa * p.pa + p.pb * p.pb + p.pg * p.pg)


def left_momentum(s: PhaseState) -> Covector:
    """Momentum map of the left action; conserved along every geodesic."""
    return coadjoint(s.g, s.p)


def casimirs(p: Covector) -> list:
    if p.model is Model.E3:
        return [p.pa, p.pb, p.pg]
    if p.model is Model.NIL:
        return [p.pg]
    return [p.pb * p.pg]


def _require(model, *allowed):
    if model not in allowed:
        raise UsageError(f"operation not defined for model {model.value}")


def nil_zeta(s: PhaseState, y_modulus: float = 1.0, x_modulus: float = 1.0) -> tuple:
    """(H, pg, x - pb/pg mod x_modulus, y + pa/pg mod y_modulus)."""
    _require(s.model, Model.NIL)
    suite = nil_zeta_suite(x_modulus=x_modulus, y_modulus=y_modulus)
    return tuple(e(s) for e in suite)


def nil_xi(s: PhaseState, x_modulus: float = 1.0) -> tuple:
    _require(s.model, Model.NIL)
    return tuple(e(s) for e in nil_xi_suite(x_modulus))


def sol_suite(p: Covector) -> tuple:
    """(H, kappa, sign pb); sign 0 marks the singular set kappa = 0."""
    _require(p.model, Model.SOL)
    return hamiltonian(p), p.pb * p.pg, int(np.sign(p.pb)) if p.pb * p.pg != 0 else 0


# array evaluators

def _H(u):
    return 0.5 * (u[..., 3] ** 2 + u[..., 4] ** 2 + u[..., 5] ** 2)


def _pa(u):
    return u[..., 3]


def _pb(u):
    return u[..., 4]


def _pg(u):
    return u[..., 5]


def _kappa(u):
    return u[..., 4] * u[..., 5]


def _nil_cx(u):
    _guard(u[..., 5], "p_gamma")
    return u[..., 0] - u[..., 4] / u[..., 5]


def _nil_cy(u):
    _guard(u[..., 5], "p_gamma")
    return u[..., 1] + u[..., 3] / u[..., 5]


def _sol_kappa_guarded(u):
    k = _kappa(u)
    _guard(k, "kappa")
    return k


def _sol_sign(u):
    _guard(_kappa(u), "kappa")
    return np.sign(u[..., 4])


def _momentum_component(model, i):
    from .groups import coadjoint_array

    def f(u):
        return coadjoint_array(model, u[..., :3], u[..., 3:])[..., i]

    return f


EL, EQ, NU = ConservationClass.EXACT_LINEAR, ConservationClass.EXACT_QUADRATIC, ConservationClass.NUMERIC


def e3_suite() -> IntegralSuite:
    return IntegralSuite(Model.E3, (Entry("p_alpha", _pa, EL), Entry("p_beta", _pb, EL), Entry("p_gamma", _pg, EL)))


def nil_zeta_suite(x_modulus: float = 1.0, y_modulus: float = 1.0) -> IntegralSuite:
    return IntegralSuite(Model.NIL, (
        Entry("g", _H, EQ),
        Entry("p_gamma", _pg, EL),
        Entry("zeta_x", _nil_cx, NU, True, x_modulus),
        Entry("zeta_y", _nil_cy, NU, True, y_modulus),
    ))


def nil_xi_suite(x_modulus: float = 1.0) -> IntegralSuite:
    z = nil_zeta_suite(x_modulus)
    return IntegralSuite(Model.NIL, z.entries[:3])


def sol_integral_suite() -> IntegralSuite:
    return IntegralSuite(Model.SOL, (
        Entry("g", _H, EQ),
        Entry("kappa", _sol_kappa_guarded, EQ),
        Entry("sign_p_beta", _sol_sign, EL),
    ))


def momentum_suite(model) -> IntegralSuite:
    """H together with the three momentum-map components."""
    model = Model.parse(model)
    cls = NU if model is Model.SOL else EQ
    return IntegralSuite(model, (
        Entry("g", _H, EQ),
        Entry("psi_alpha", _momentum_component(model, 0), cls),
        Entry("psi_beta", _momentum_component(model, 1), cls),
        Entry("psi_gamma", _momentum_component(model, 2), cls),
    ))


def default_suite(model) -> IntegralSuite:
    model = Model.parse(model)
    if model is Model.E3:
        return e3_suite()
    if model is Model.NIL:
        return nil_zeta_suite()
    return sol_integral_suite()


def random_regular_momentum(model, rng, radius: float = 2.0, margin: float = 0.05) -> tuple:
    """Random covector with |p| <= radius, normalised to H = 1/2, away from the singular set."""
    m = Model.parse(model)
    while True:
        p = rng.uniform(-radius, radius, 3)
        if np.linalg.norm(p) > radius or np.linalg.norm(p) < 1e-3:
            continue
        q = normalize_energy(Covector(m, *p)).as_array()
        if m is Model.NIL and abs(q[2]) < margin:
            continue
        if m is Model.SOL and abs(q[1] * q[2]) < margin:
            continue
        return tuple(float(v) for v in q)


def check_regular(model, u) -> None:
    """Raise SingularSetError when u lies outside the regular set of the model's suite."""
    default_suite(model).evaluate(u)


# Poisson bracket

_COORD_NAMES = ("x", "y", "z", "px", "py", "pz")


def bracket_fd(f1, f2, s, fd_step: float = DEFAULT_FD_STEP, model=None) -> float:
    """Canonical Poisson bracket {f1, f2} at s by central differences.

    Gradients are taken in the canonical chart (x, y, z, px, py, pz); f1 and f2
    receive left-trivialised state arrays. Returns
    sum_i (df1/dq_i df2/dp_i - df1/dp_i df2/dq_i).
    """
    if fd_step <= 0:
        raise UsageError("fd_step must be positive")
    if isinstance(s, PhaseState):
        model, u = s.model, s.as_array()
    else:
        model, u = Model.parse(model), np.asarray(s, dtype=float)
    g = u[:3]
    P = to_canonical(model, g, u[3:])
    q = np.concatenate([g, P])
    grads = np.empty((2, 6))
    for i in range(6):
        vals = np.empty((2, 2))
        for k, sign in enumerate((1.0, -1.0)):
            qq = q.copy()
            qq[i] += sign * fd_step
            uu = np.concatenate([qq[:3], from_canonical(model, qq[:3], qq[3:])])
            for j, f in enumerate((f1, f2)):
                v = float(f(uu))
                if not np.isfinite(v):
                    raise StencilError(f"non-finite value at offset {'+' if sign > 0 else '-'}{fd_step:g} in {_COORD_NAMES[i]}")
                vals[j, k] = v
        grads[:, i] = (vals[:, 0] - vals[:, 1]) / (2.0 * fd_step)
    a, b = grads
    return float(np.sum(a[:3] * b[3:] - a[3:] * b[:3]))

