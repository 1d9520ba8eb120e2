"""Diagnostics on trajectories: drift reports, Poincare sections, rotation
vectors, recurrence times and maximal Lyapunov exponents.

Quotient distances use the fundamental-domain coordinates of a lattice
(:func:`geoflow.lattices.domain_coordinates`), where the domain is the unit
box. Group coordinates are compared with circle distances scaled back by the
box periods, momenta with the Euclidean distance.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .dynamics import NEWTON_TOL, MAX_ITER, PhaseState, Scheme, Trajectory, _runner, vector_field
from .errors import IntegrationError, LinearRegimeError, UsageError
from .groups import GroupElement, Model, multiply
from .integrals import IntegralSuite, circle_distance
from .lattices import LatticeSpec, domain_coordinates, lattice_element, lattice_for, reduce_array, reduce_coords

SECTION_COORDS = ("x", "y", "z", "pA", "pB", "pG")
NOT_A_TORUS = 0.1
LYAPUNOV_D0 = 1e-8
LINEAR_REGIME = 1e-2
RECURRENCE_ESCAPE = 0.25


# drift

@dataclass(frozen=True)
class DriftRecord:
    name: str
    initial: float
    max_drift: float
    circle: bool
    cls: str


@dataclass(frozen=True)
class DriftReport:
    records: tuple
    model: Model
    scheme: str
    T: float
    h: float

    def __getitem__(self, name) -> DriftRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def max_drifts(self) -> dict:
        return {r.name: r.max_drift for r in self.records}

    def to_dict(self) -> dict:
        return {r.name: {"initial": r.initial, "maxDrift": r.max_drift, "class": r.cls} for r in self.records}

    def metadata(self) -> dict:
        return {"model": self.model.value, "scheme": self.scheme, "T": self.T, "h": self.h}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def drift_report(traj: Trajectory, suite: IntegralSuite) -> DriftReport:
    """Max distance of every suite entry from its initial value along traj."""
    vals = suite.values(traj)
    recs = []
    for j, e in enumerate(suite.entries):
        v = vals[:, j]
        if e.circle:
            d = circle_distance(v, v[0], e.modulus)
        else:
            d = np.abs(v - v[0])
        recs.append(DriftRecord(e.name, float(v[0]), float(np.max(d)), e.circle, e.cls.value))
    T = float(traj.times[-1] - traj.times[0])
    return DriftReport(tuple(recs), traj.model, traj.scheme.value, T, float(traj.step))


# cubic Hermite interpolation between stored samples

def _hermite(u0, u1, f0, f1, dt, s):
    """State at fraction s of [t0, t0 + dt] from endpoint values and derivatives."""
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * u0 + h10 * dt * f0 + h01 * u1 + h11 * dt * f1


class _Interp:
    def __init__(self, traj: Trajectory):
        self.t = traj.times
        self.u = traj.states
        self.f = vector_field(traj.model, traj.states)

    def at(self, i: int, t: float) -> np.ndarray:
        dt = self.t[i + 1] - self.t[i]
        s = (t - self.t[i]) / dt
        return _hermite(self.u[i], self.u[i + 1], self.f[i], self.f[i + 1], dt, s)


def _root(fun, a, b):
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        # interpolant misses the level that the samples bracket: take the secant
        return a + (b - a) * fa / (fa - fb)
    return brentq(fun, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


# Poincare sections

@dataclass(frozen=True)
class SectionSpec:
    coordinate: str
    level: float = 0.0
    direction: int = 1

    def __post_init__(self):
        if self.coordinate not in SECTION_COORDS:
            raise UsageError(f"section coordinate must be one of {', '.join(SECTION_COORDS)}")
        if self.direction not in (1, -1):
            raise UsageError("section direction must be +1 or -1")

    @property
    def index(self) -> int:
        return SECTION_COORDS.index(self.coordinate)


@dataclass(frozen=True, eq=False)
class Section:
    """Crossing states of a trajectory; indexing yields PhaseStates."""

    model: Model
    spec: SectionSpec
    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    def __getitem__(self, i) -> PhaseState:
        return PhaseState.from_array(self.model, self.states[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t",) + SECTION_COORDS)
        for t, u in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in u])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"model": self.model.value, "coordinate": self.spec.coordinate, "level": self.spec.level,
                "direction": self.spec.direction, "times": self.times.tolist(), "states": self.states.tolist()}


def poincare_section(traj: Trajectory, spec: SectionSpec) -> Section:
    """Crossings of ``coordinate = level`` in the given direction, refined by cubic Hermite interpolation."""
    j = spec.index
    v = traj.states[:, j] - spec.level
    if spec.direction > 0:
        hits = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
    else:
        hits = np.nonzero((v[:-1] > 0) & (v[1:] <= 0))[0]
    ip = _Interp(traj)
    times, states = [], []
    for i in hits:
        t = _root(lambda t: ip.at(i, t)[j] - spec.level, traj.times[i], traj.times[i + 1])
        u = ip.at(i, t)
        times.append(t)
        states.append(u)
    return Section(traj.model, spec, np.array(times, dtype=float), np.array(states, dtype=float).reshape(-1, 6))


# rotation vectors

@dataclass(frozen=True)
class RotationEstimate:
    """Frequencies in lattice periods per unit time of the tracked angles."""

    frequencies: np.ndarray
    residual: float
    angles: tuple
    not_a_torus: bool
    strobed: bool
    phase_frequency: Optional[float] = None
    samples: int = 0

    def to_dict(self) -> dict:
        return {
            "frequencies": [float(w) for w in self.frequencies],
            "angles": list(self.angles),
            "residual": self.residual,
            "notATorus": self.not_a_torus,
            "strobed": self.strobed,
            "phaseFrequency": self.phase_frequency,
            "samples": self.samples,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("angle", "frequency"))
        for a, f in zip(self.angles, self.frequencies):
            w.writerow((a, repr(float(f))))
        return buf.getvalue()


_ANGLES = {Model.E3: ("x", "y", "z"), Model.NIL: ("x", "y/2", "z"), Model.SOL: ("x/log u", "s1", "s2")}


def _phase(model, u):
    """Angle (in turns) of the periodic momentum motion, or None when it has none."""
    u = np.asarray(u)
    if model is Model.NIL:
        return np.arctan2(u[..., 4], u[..., 3]) / (2 * np.pi)
    if model is Model.SOL:
        with np.errstate(divide="ignore"):
            s = 0.5 * np.log(np.abs(u[..., 4] / u[..., 5]))
        return np.arctan2(u[..., 3], s) / (2 * np.pi)
    return None


def _phase_radius(model, u):
    if model is Model.NIL:
        return np.hypot(u[..., 3], u[..., 4])
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 0.5 * np.log(np.abs(u[..., 4] / u[..., 5]))
    return np.hypot(u[..., 3], s)


def _strobe(traj: Trajectory):
    """Times and states where the momentum phase returns to its initial value."""
    model = traj.model
    u = traj.states
    if model is Model.E3:
        return None
    if model is Model.SOL and np.any(u[:, 4] * u[:, 5] == 0):
        return None
    if np.min(_phase_radius(model, u)) < 1e-9:
        return None
    raw = _phase(model, u)
    phi = np.unwrap(raw * 2 * np.pi) / (2 * np.pi) - raw[0]
    ip = _Interp(traj)
    times, states = [traj.times[0]], [u[0]]
    for i in range(len(u) - 1):
        a, b = phi[i], phi[i + 1]
        if b >= a:
            ks = range(math.floor(a) + 1, math.floor(b) + 1)
        else:
            ks = range(math.ceil(a) - 1, math.ceil(b) - 1, -1)
        for k in ks:
            if k == 0:
                continue

            def f(t, i=i, k=k):
                w = _phase(model, ip.at(i, t)) - raw[0]
                return phi[i] + ((w - phi[i] + 0.5) % 1.0 - 0.5) - k

            t = _root(f, traj.times[i], traj.times[i + 1])
            if t > times[-1]:
                times.append(t)
                states.append(ip.at(i, t))
    if len(times) < 3:
        return None
    times = np.array(times)
    span = times[-1] - times[0]
    nturn = len(times) - 1
    return times, np.array(states), nturn / span * np.sign(phi[-1] - phi[0])


def _lattice_angles(lattice: LatticeSpec, g) -> np.ndarray:
    c = domain_coordinates(lattice, np.asarray(g, dtype=float).reshape(-1, 3))
    return np.unwrap(c * 2 * np.pi, axis=0) / (2 * np.pi)


def rotation_vector(traj: Trajectory, lattice: Optional[LatticeSpec] = None) -> RotationEstimate:
    """Linear-in-time fit of the lattice angles along the unreduced trajectory.

    For Nil and Sol the momentum itself moves periodically on a torus, so the
    angles are sampled stroboscopically at the returns of the momentum phase
    (refined by Hermite interpolation); this removes the fast oscillation and
    leaves the drift of the torus angles. E3, relative equilibria and orbits
    with fewer than two returns use every sample.
    """
    if lattice is None:
        lattice = lattice_for(traj.model)
    if lattice.model is not traj.model:
        raise UsageError("lattice and trajectory models differ")
    if len(traj) < 3:
        raise UsageError("rotation_vector needs at least three samples")
    st = _strobe(traj)
    if st is None:
        t, g, wphi = traj.times, traj.g, None
    else:
        t, states, wphi = st
        g = states[:, :3]
    theta = _lattice_angles(lattice, g)
    A = np.stack([np.ones_like(t), t - t[0]], axis=1)
    coef, *_ = np.linalg.lstsq(A, theta, rcond=None)
    residual = float(np.max(np.abs(theta - A @ coef)))
    return RotationEstimate(coef[1], residual, _ANGLES[traj.model], residual > NOT_A_TORUS,
                            st is not None, None if wphi is None else float(wphi), len(t))


# quotient metric, recurrence

def _left_translate(model, n, g):
    """n * g for a single element n (3,) and coordinates g (..., 3)."""
    x, y, z = g[..., 0], g[..., 1], g[..., 2]
    a, b, c = n
    if model is Model.NIL:
        return np.stack([a + x, b + y, c + z + 0.5 * (a * y - x * b)], axis=-1)
    if model is Model.SOL:
        return np.stack([a + x, math.exp(a) * y + b, math.exp(-a) * z + c], axis=-1)
    return g + n


# lattice steps across the walls of the base; the remaining coordinates are circles
_BASE_STEPS = {
    Model.E3: [(0, 0, 0)],
    Model.NIL: [(a, b, 0) for a in (-1, 0, 1) for b in (-1, 0, 1)],
    Model.SOL: [(k, 0, 0) for k in (-1, 0, 1)],
}
_CIRCLES = {Model.E3: slice(0, 3), Model.NIL: slice(2, 3), Model.SOL: slice(1, 3)}


def quotient_difference(lattice: LatticeSpec, u, v) -> np.ndarray:
    """Componentwise quotient differences (..., 6): group part, then momenta.

    Both points are reduced to the fundamental domain. v is then stepped
    across the neighbouring walls of the base (x, y for Nil; x for Sol), the
    fibre coordinates are compared as circles, and the closest candidate wins.
    The group part is scaled by the box periods.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    model = lattice.model
    cu = domain_coordinates(lattice, reduce_array(lattice, u[..., :3]))
    rv = reduce_array(lattice, v[..., :3])
    circ = _CIRCLES[model]
    best = None
    for exps in _BASE_STEPS[model]:
        n = lattice_element(lattice, exps).as_array()
        d = domain_coordinates(lattice, _left_translate(model, n, rv)) - cu
        d[..., circ] -= np.round(d[..., circ])
        dg = np.abs(d) * lattice.periods
        if best is None:
            best = dg
        else:
            closer = np.sum(dg ** 2, axis=-1) < np.sum(best ** 2, axis=-1)
            best = np.where(closer[..., None], dg, best)
    return np.concatenate([best, np.abs(u[..., 3:] - v[..., 3:])], axis=-1)


def quotient_distance(lattice: LatticeSpec, u, v):
    return np.linalg.norm(quotient_difference(lattice, u, v), axis=-1)


def reduce_trajectory(traj: Trajectory, lattice: Optional[LatticeSpec] = None) -> Trajectory:
    """Copy of traj with every group coordinate moved into the fundamental domain."""
    if lattice is None:
        lattice = lattice_for(traj.model)
    g = reduce_array(lattice, traj.g)
    return Trajectory(traj.model, traj.times, np.concatenate([g, traj.p], axis=1), traj.scheme, traj.step,
                      dict(traj.meta, reduced=lattice.name))


def recurrence_time(traj: Trajectory, epsilon: float, lattice: Optional[LatticeSpec] = None,
                    escape: float = RECURRENCE_ESCAPE) -> Optional[float]:
    """First sample time at which the orbit comes back within epsilon of its start.

    The orbit must first leave the ball of radius ``escape`` (with
    epsilon < escape), so a slowly moving start is not counted as its own
    return and the result is monotone in epsilon.
    """
    if not epsilon > 0:
        raise UsageError("epsilon must be positive")
    if not epsilon < escape:
        raise UsageError(f"epsilon must be smaller than the escape radius {escape}")
    if lattice is None:
        lattice = lattice_for(traj.model)
    d = quotient_distance(lattice, traj.states, traj.states[0])
    out = np.nonzero(d >= escape)[0]
    if out.size == 0:
        return None
    back = np.nonzero(d[out[0]:] < epsilon)[0]
    if back.size == 0:
        return None
    return float(traj.times[out[0] + back[0]] - traj.times[0])


# Lyapunov exponent

def _advance(model, u, h, n, scheme):
    out, _, status, fail, last = _runner(scheme)(model.code, u, h, n, n, NEWTON_TOL, MAX_ITER)
    if status:
        raise IntegrationError(f"{scheme.value}: implicit solve did not converge", h=h)
    return out[-1]


def _translate(lattice, exps, u):
    n = lattice_element(lattice, exps)
    g = multiply(n, GroupElement(lattice.model, *u[:3]))
    return np.array([g.x, g.y, g.z, u[3], u[4], u[5]])


def lyapunov_max(s: PhaseState, lattice: Optional[LatticeSpec] = None, T: float = 500.0,
                 renorm_every: float = 1.0, h: float = 1e-2, scheme=Scheme.IMPLICIT_MIDPOINT,
                 seed: int = 0, d0: float = LYAPUNOV_D0) -> float:
    """Two-trajectory (Benettin) estimate of the largest Lyapunov exponent.

    The companion starts at quotient distance d0 from s, displaced along the
    group fibre in a seeded random direction. Every ``renorm_every`` time
    units both orbits are moved back to the fundamental domain by the lattice
    element that reduces the reference, the separation is measured in the
    quotient metric, its log growth accumulated and the companion pulled back
    to distance d0 along the current separation.
    """
    scheme = Scheme.parse(scheme)
    if lattice is None:
        lattice = lattice_for(s.model)
    if lattice.model is not s.model:
        raise UsageError("lattice and state models differ")
    if not (T > 0 and renorm_every > 0 and h > 0 and renorm_every <= T and h <= renorm_every):
        raise UsageError("need T >= renorm_every >= h > 0")
    model = s.model
    n = max(1, int(round(renorm_every / h)))
    intervals = max(1, int(round(T / (n * h))))

    ref = s.as_array()
    coords, exps = reduce_coords(lattice, ref[:3])
    ref = _translate(lattice, exps, ref)
    rng = np.random.default_rng(seed)
    v = np.zeros(6)
    v[:3] = rng.standard_normal(3)
    v /= np.linalg.norm(quotient_difference(lattice, ref + v * 1e-6, ref)) / 1e-6
    comp = ref + d0 * v

    total = 0.0
    for _ in range(intervals):
        ref = _advance(model, ref, h, n, scheme)
        comp = _advance(model, comp, h, n, scheme)
        _, exps = reduce_coords(lattice, ref[:3])
        ref = _translate(lattice, exps, ref)
        comp = _translate(lattice, exps, comp)
        d = float(np.linalg.norm(quotient_difference(lattice, comp, ref)))
        if d > LINEAR_REGIME:
            raise LinearRegimeError(f"separation {d:.3g} left the linear regime; decrease renorm_every")
        if d == 0.0:
            raise LinearRegimeError("companion collapsed onto the reference orbit")
        total += math.log(d / d0)
        comp = ref + (comp - ref) * (d0 / d)
    return max(0.0, total / (intervals * n * h))
