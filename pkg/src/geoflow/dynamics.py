"""Euler-Arnold dynamics on T*G for the metric sum(sigma ⊗ sigma).

The left-trivialised state is (g, p) with g in global coordinates and p the
body momentum. With H(p) = |p|^2 / 2 the flow is

    dg/dt = dL_g p            (reconstruction)
    dp/dt = ad*_p p           (Euler-Arnold)

which in the coframe bases reads

    Nil : dp/dt = (-pb pg, pa pg, 0)
    Sol : dp/dt = (pg^2 - pb^2, pa pb, -pa pg)

The sign is the one for which the left momentum map
(:func:`geoflow.groups.coadjoint`) is a first integral.

Three schemes are provided. ``IMPLICIT_MIDPOINT`` is the midpoint rule on
the six coordinates, solved by Newton on the momentum block. ``SPLITTING_LEAPFROG``
is a symmetric Lie-group scheme: g <- g exp(h xi), p <- Ad*-transport by
exp(-h xi), xi the mean momentum, so that momentum map and Casimirs are
conserved to rounding. ``ORACLE_RK8`` integrates Hamilton's equations in the
canonical chart (x, y, z, px, py, pz) with the fixed-step 8th-order
Dormand-Prince tableau and shares no code with the other two.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import IntegrationError, UsageError
from .groups import (
    AlgebraVector,
    Covector,
    GroupElement,
    Model,
    coordinate_velocity,
    from_canonical,
    to_canonical,
)

NEWTON_TOL = 1e-13
MAX_ITER = 50
DEFAULT_STRIDE = 10

CSV_COLUMNS = ("t", "x", "y", "z", "pA", "pB", "pG")


class Scheme(str, enum.Enum):
    IMPLICIT_MIDPOINT = "implicit_midpoint"
    SPLITTING_LEAPFROG = "splitting_leapfrog"
    ORACLE_RK8 = "oracle_rk8"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"midpoint": cls.IMPLICIT_MIDPOINT, "leapfrog": cls.SPLITTING_LEAPFROG,
                   "splitting": cls.SPLITTING_LEAPFROG, "rk8": cls.ORACLE_RK8, "oracle": cls.ORACLE_RK8}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise UsageError(f"unknown scheme {value!r}") from None


@dataclass(frozen=True)
class PhaseState:
    g: GroupElement
    p: Covector

    def __post_init__(self):
        if self.g.model is not self.p.model:
            raise UsageError(f"model mismatch: {self.g.model.value} vs {self.p.model.value}")

    @property
    def model(self) -> Model:
        return self.g.model

    def as_array(self) -> np.ndarray:
        return np.array([self.g.x, self.g.y, self.g.z, self.p.pa, self.p.pb, self.p.pg], dtype=float)

    @classmethod
    def from_array(cls, model, u) -> "PhaseState":
        model = Model.parse(model)
        return cls(GroupElement.from_array(model, u[:3]), Covector.from_array(model, u[3:6]))

    @classmethod
    def make(cls, model, p, g=(0.0, 0.0, 0.0)) -> "PhaseState":
        model = Model.parse(model)
        return cls(GroupElement(model, *map(float, g)), Covector(model, *map(float, p)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped samples of the flow; ``states`` has shape (n, 6)."""

    model: Model
    times: np.ndarray
    states: np.ndarray
    scheme: Scheme
    step: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float).reshape(-1, 6)
        if times.shape[0] != states.shape[0]:
            raise UsageError("times and states differ in length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise UsageError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "model", Model.parse(self.model))
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))

    def __len__(self):
        return self.times.shape[0]

    def state(self, i) -> PhaseState:
        return PhaseState.from_array(self.model, self.states[i])

    @property
    def g(self) -> np.ndarray:
        return self.states[:, :3]

    @property
    def p(self) -> np.ndarray:
        return self.states[:, 3:]

    def decimate(self, k: int) -> "Trajectory":
        """Every k-th sample (the last sample is always kept)."""
        keep = np.arange(0, len(self), k)
        if keep[-1] != len(self) - 1:
            keep = np.append(keep, len(self) - 1)
        return Trajectory(self.model, self.times[keep], self.states[keep], self.scheme, self.step, dict(self.meta))

    # serialisation
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t, u in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in u])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "scheme": self.scheme.value,
            "step": self.step,
            "meta": self.meta,
            "times": self.times.tolist(),
            "states": self.states.tolist(),
        }

    def to_json(self) -> str:
        # json emits repr() of floats, which round-trips doubles exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "Trajectory":
        return cls(d["model"], np.array(d["times"], dtype=float), np.array(d["states"], dtype=float),
                   d["scheme"], float(d["step"]), dict(d.get("meta", {})))

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_csv(cls, text: str, model, scheme=Scheme.IMPLICIT_MIDPOINT, step=float("nan")) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise UsageError(f"expected CSV header {','.join(CSV_COLUMNS)}")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 7)
        return cls(model, data[:, 0], data[:, 1:], scheme, step)


def euler_field(p: Covector) -> Covector:
    """dp/dt of the Euler-Arnold equation for H = |p|^2 / 2."""
    return Covector(p.model, *kernels.euler(p.model.code, p.pa, p.pb, p.pg))


def reconstruction_field(s: PhaseState) -> AlgebraVector:
    """Body velocity; the coframe is orthonormal so it equals p componentwise."""
    return AlgebraVector(s.model, s.p.pa, s.p.pb, s.p.pg)


def euler_array(model, p) -> np.ndarray:
    model = Model.parse(model)
    p = np.asarray(p, dtype=float)
    pa, pb, pg = p[..., 0], p[..., 1], p[..., 2]
    if model is Model.NIL:
        return np.stack([-pb * pg, pa * pg, np.zeros_like(pg)], axis=-1)
    if model is Model.SOL:
        return np.stack([pg * pg - pb * pb, pa * pb, -pa * pg], axis=-1)
    return np.zeros_like(p)


def vector_field(model, u) -> np.ndarray:
    """Full six-dimensional field (dg/dt in coordinates, dp/dt) at states u[..., 6]."""
    u = np.asarray(u, dtype=float)
    g, p = u[..., :3], u[..., 3:]
    return np.concatenate([coordinate_velocity(model, g, p), euler_array(model, p)], axis=-1)


def hamiltonian_array(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return 0.5 * np.sum(p * p, axis=-1)


def normalize_energy(p: Covector, energy: float = 0.5) -> Covector:
    """Rescale p onto the level H = energy (unit speed for the default)."""
    n = math.sqrt(p.pa ** 2 + p.pb ** 2 + p.pg ** 2)
    if n == 0.0:
        raise UsageError("cannot normalise the zero covector")
    f = math.sqrt(2.0 * energy) / n
    return Covector(p.model, p.pa * f, p.pb * f, p.pg * f)


def _runner(scheme: Scheme):
    if scheme is Scheme.IMPLICIT_MIDPOINT:
        return kernels.midpoint_run
    if scheme is Scheme.SPLITTING_LEAPFROG:
        return kernels.leapfrog_run
    raise UsageError("use oracle_integrate for the RK8 oracle")


def step(s: PhaseState, h: float, scheme=Scheme.IMPLICIT_MIDPOINT) -> PhaseState:
    """One step of size h (negative h steps backwards)."""
    scheme = Scheme.parse(scheme)
    if h == 0 or not math.isfinite(h):
        raise UsageError("step size must be finite and nonzero")
    out, _, status, _, _ = _runner(scheme)(s.model.code, s.as_array(), float(h), 1, 1, NEWTON_TOL, MAX_ITER)
    if status:
        raise IntegrationError(f"{scheme.value}: implicit solve did not converge", state=s, h=h, t=0.0)
    return PhaseState.from_array(s.model, out[-1])


def _nsteps(T, h):
    if not (T > 0 and h > 0 and h <= T):
        raise UsageError(f"need T > 0 and 0 < h <= T, got T={T}, h={h}")
    return max(1, int(round(T / h)))


def integrate(s: PhaseState, T: float, h: float, scheme=Scheme.IMPLICIT_MIDPOINT,
              stride: int = DEFAULT_STRIDE) -> Trajectory:
    """Flow s for time T with step h, keeping every ``stride``-th step and the last."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.ORACLE_RK8:
        return oracle_integrate(s, T, h, stride=stride)
    if stride < 1:
        raise UsageError("stride must be >= 1")
    n = _nsteps(T, h)
    out, idx, status, fail, last = _runner(scheme)(s.model.code, s.as_array(), float(h), n, int(stride),
                                                   NEWTON_TOL, MAX_ITER)
    if status:
        t = (fail - 1) * h
        raise IntegrationError(f"{scheme.value}: implicit solve did not converge at t={t:g}",
                               state=PhaseState.from_array(s.model, last), h=h, t=t)
    return Trajectory(s.model, idx * h, out, scheme, h, {"T": n * h, "stride": stride})


def _dop853_tableau():
    from scipy.integrate._ivp import dop853_coefficients as c

    s = c.N_STAGES
    return np.ascontiguousarray(c.A[:s, :s]), np.ascontiguousarray(c.B)


_TABLEAU = None


def oracle_integrate(s: PhaseState, T: float, h: float, stride: int = DEFAULT_STRIDE) -> Trajectory:
    """Fixed-step RK8 on Hamilton's equations in the canonical chart."""
    global _TABLEAU
    if _TABLEAU is None:
        _TABLEAU = _dop853_tableau()
    A, B = _TABLEAU
    if stride < 1:
        raise UsageError("stride must be >= 1")
    n = _nsteps(T, h)
    g0 = s.g.as_array()
    q0 = np.concatenate([g0, to_canonical(s.model, g0, s.p.as_array())])
    out, idx, status, fail, last = kernels.rk_run(s.model.code, q0, float(h), n, int(stride), A, B)
    if status:
        raise IntegrationError(f"oracle overflow at t={fail * h:g}", h=h, t=fail * h)
    states = np.concatenate([out[:, :3], from_canonical(s.model, out[:, :3], out[:, 3:])], axis=1)
    return Trajectory(s.model, idx * h, states, Scheme.ORACLE_RK8, h, {"T": n * h, "stride": stride})
