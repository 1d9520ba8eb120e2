"""Command-line interface: ``geoflow <command> [options]``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
3 verification failure (the report is still written).

Options may also come from a JSON config file (``--config run.json``) whose
keys are the long option names; flags override the file, the file overrides
the defaults. ``GEOFLOW_OUT`` overrides the output directory unless ``--out``
is given on the command line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from ._backend import BACKEND
from .analysis import (
    SectionSpec,
    drift_report,
    lyapunov_max,
    poincare_section,
    rotation_vector,
)
from .dynamics import PhaseState, Scheme, integrate, oracle_integrate
from .errors import (
    CapacityError,
    GeoflowError,
    IntegrationError,
    LinearRegimeError,
    NotAnosovError,
    ReductionError,
    SingularSetError,
    StencilError,
    UsageError,
)
from .groups import Model
from .integrals import bracket_fd, default_suite, momentum_suite, nil_xi_suite, random_regular_momentum
from .lattices import QuadraticField, fundamental_unit, lattice_for, monodromy_stretch, sol_lattice

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

DEFAULT_P = {"e3": (1.0, 0.0, 0.0), "nil": (0.3, 0.4, 1.0), "sol": (0.1, 1.0, 1.0)}

COMMON_DEFAULTS = {
    "model": "nil",
    "p": None,
    "g": (0.0, 0.0, 0.0),
    "scheme": "implicit_midpoint",
    "stride": 10,
    "lattice": None,
    "out": ".",
    "prefix": None,
    "seed": 0,
    "jobs": 1,
}

COMMAND_DEFAULTS = {
    "simulate": {"T": 10.0, "h": 1e-3},
    "verify": {"T": 100.0, "h": 1e-2, "random": 0},
    "section": {"T": 100.0, "h": 1e-2, "stride": 1, "coordinate": "pA", "level": 0.0, "direction": 1},
    "rotation": {"T": 200.0, "h": 1e-2, "stride": 1},
    "lyapunov": {"T": 500.0, "h": 1e-2, "renorm": 1.0},
    "lattice": {"d": None},
    "pell": {"d": 2, "bound": 10**6},
}

# tolerances of the acceptance criteria, used by `verify`
TOL_ORACLE = 1e-6
TOL_H = 1e-10
TOL_KAPPA = 1e-10
TOL_PGAMMA = 1e-12
TOL_MOMENTUM = 1e-8
TOL_E3_MOMENTUM = 1e-12
TOL_NIL_SUITE = 1e-6
TOL_SOL_SUITE = 1e-9
TOL_BRACKET = 1e-5
ORACLE_T, ORACLE_H = 10.0, 1e-3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _vec3(text):
    if isinstance(text, (list, tuple)):
        vals = list(text)
    else:
        vals = [v for v in str(text).replace(" ", "").split(",") if v]
    try:
        out = tuple(float(v) for v in vals)
    except ValueError:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(out) != 3:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="geoflow", description="Integrable geodesic flows on E3, Nil and Sol.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, flow=True):
        p.add_argument("--config", default=S, help="JSON file with option values")
        p.add_argument("--model", default=S, help="e3, nil or sol")
        p.add_argument("--out", default=S, help="output directory")
        p.add_argument("--prefix", default=S, help="output file stem")
        p.add_argument("--seed", type=int, default=S)
        if flow:
            p.add_argument("--p", default=S, help="initial momentum pA,pB,pG")
            p.add_argument("--g", default=S, help="initial group element x,y,z")
            p.add_argument("--T", type=float, default=S)
            p.add_argument("--h", type=float, default=S)
            p.add_argument("--scheme", default=S, help="implicit_midpoint, splitting_leapfrog or oracle_rk8")
            p.add_argument("--stride", type=int, default=S)
            p.add_argument("--lattice", default=S, help="standard, e3:cube or sol:<d>")

    p = sub.add_parser("simulate", help="integrate and write the trajectory as CSV plus JSON metadata")
    common(p)
    p = sub.add_parser("verify", help="conservation, commutation and oracle checks")
    common(p)
    p.add_argument("--random", type=int, default=S, help="also check N seeded random initial conditions")
    p.add_argument("--jobs", type=int, default=S)
    p = sub.add_parser("section", help="Poincare section of a simulated trajectory")
    common(p)
    p.add_argument("--coordinate", default=S)
    p.add_argument("--level", type=float, default=S)
    p.add_argument("--direction", type=int, default=S)
    p = sub.add_parser("rotation", help="rotation vector of a simulated trajectory")
    common(p)
    p = sub.add_parser("lyapunov", help="maximal Lyapunov exponent on the quotient")
    common(p)
    p.add_argument("--renorm", type=float, default=S, help="renormalisation interval")
    p = sub.add_parser("lattice", help="print a lattice specification as JSON")
    common(p, flow=False)
    p.add_argument("--d", type=int, default=S, help="square-free d for the Sol lattice")
    p = sub.add_parser("pell", help="fundamental unit of Q(sqrt d)")
    p.add_argument("--config", default=S)
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--bound", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--prefix", default=S)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags, in increasing precedence."""
    flags = {k: v for k, v in vars(ns).items() if k not in ("command",)}
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(ns.command, {}))
    env_out = os.environ.get("GEOFLOW_OUT")
    path = flags.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                filecfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config file {path}: {err}") from None
        if not isinstance(filecfg, dict):
            raise UsageError("config file must hold a single JSON object")
        cfg.update(filecfg)
    if env_out:
        cfg["out"] = env_out
    cfg.update(flags)
    cfg["command"] = ns.command
    cfg["model"] = Model.parse(cfg["model"]).value
    if cfg.get("p") is None:
        cfg["p"] = DEFAULT_P[cfg["model"]]
    cfg["p"] = _vec3(cfg["p"])
    cfg["g"] = _vec3(cfg["g"])
    cfg["scheme"] = Scheme.parse(cfg["scheme"]).value
    for key in ("T", "h"):
        if key in cfg and not (isinstance(cfg[key], (int, float)) and cfg[key] > 0 and np.isfinite(cfg[key])):
            raise UsageError(f"{key} must be a positive number")
    if int(cfg["stride"]) < 1:
        raise UsageError("stride must be >= 1")
    if int(cfg.get("jobs", 1)) < 1:
        raise UsageError("jobs must be >= 1")
    return cfg


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out(cfg, suffix) -> str:
    stem = cfg.get("prefix") or cfg["command"]
    return os.path.join(cfg["out"], f"{stem}{suffix}")


def _state(cfg) -> PhaseState:
    return PhaseState.make(cfg["model"], cfg["p"], cfg["g"])


def _lattice(cfg):
    return lattice_for(cfg["model"], cfg.get("lattice"))


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _simulate(cfg):
    return integrate(_state(cfg), float(cfg["T"]), float(cfg["h"]), cfg["scheme"], int(cfg["stride"]))


# commands

def cmd_simulate(cfg) -> int:
    traj = _simulate(cfg)
    meta = {
        "model": cfg["model"],
        "scheme": cfg["scheme"],
        "T": float(cfg["T"]),
        "h": float(cfg["h"]),
        "stride": int(cfg["stride"]),
        "p0": list(cfg["p"]),
        "g0": list(cfg["g"]),
        "rows": len(traj),
        "columns": ["t", "x", "y", "z", "pA", "pB", "pG"],
        "backend": BACKEND,
        "csv": os.path.basename(_out(cfg, ".csv")),
    }
    _write_atomic(_out(cfg, ".csv"), traj.to_csv())
    _write_atomic(_out(cfg, ".json"), json.dumps(meta, indent=2))
    _emit(meta)
    return EXIT_OK


def _check(checks, name, value, tol):
    checks.append({"name": name, "value": float(value), "tol": tol, "pass": bool(value <= tol)})


def verify_state(model: str, p, g, T: float, h: float) -> dict:
    """Run every conservation, commutation and oracle check on one initial condition."""
    s = PhaseState.make(model, p, g)
    m = s.model
    u0 = s.as_array()
    suite = default_suite(m)
    try:
        suite.evaluate(u0)
    except SingularSetError as err:
        raise SingularSetError(f"initial data off the regular set: {err}; verify requires a regular point "
                               "(p_gamma != 0 for nil, kappa = p_beta p_gamma != 0 for sol)") from None
    checks = []
    mid = integrate(s, T, h, Scheme.IMPLICIT_MIDPOINT, stride=1)
    rep = drift_report(mid, suite)
    H = 0.5 * np.sum(mid.p ** 2, axis=1)
    _check(checks, "H (midpoint)", np.max(np.abs(H - H[0])), TOL_H)
    if m is Model.NIL:
        _check(checks, "p_gamma (midpoint)", np.max(np.abs(mid.p[:, 2] - mid.p[0, 2])), TOL_PGAMMA)
        for r in rep.records:
            _check(checks, f"zeta:{r.name}", r.max_drift, TOL_NIL_SUITE)
        for r in drift_report(mid, nil_xi_suite()).records:
            _check(checks, f"xi:{r.name}", r.max_drift, TOL_NIL_SUITE)
    elif m is Model.SOL:
        kap = mid.p[:, 1] * mid.p[:, 2]
        _check(checks, "kappa (midpoint)", np.max(np.abs(kap - kap[0])), TOL_KAPPA)
        for r in rep.records:
            _check(checks, f"sol:{r.name}", r.max_drift, TOL_SOL_SUITE)
    else:
        for r in rep.records:
            _check(checks, f"e3:{r.name}", r.max_drift, TOL_E3_MOMENTUM)

    # momentum map: midpoint conserves it exactly only for polynomial actions
    scheme = Scheme.SPLITTING_LEAPFROG if m is Model.SOL else Scheme.IMPLICIT_MIDPOINT
    mom = drift_report(integrate(s, T, h, scheme, stride=1), momentum_suite(m))
    tol = TOL_E3_MOMENTUM if m is Model.E3 else TOL_MOMENTUM
    for r in mom.records[1:]:
        _check(checks, f"momentum:{r.name} ({scheme.value})", r.max_drift, tol)

    # oracle cross-check
    a = integrate(s, ORACLE_T, ORACLE_H, Scheme.IMPLICIT_MIDPOINT, stride=10)
    b = oracle_integrate(s, ORACLE_T, ORACLE_H, stride=10)
    _check(checks, "oracle equivalence", np.max(np.abs(a.states - b.states)), TOL_ORACLE)

    # Poisson brackets at the initial point
    H_f = lambda u: 0.5 * (u[3] ** 2 + u[4] ** 2 + u[5] ** 2)  # noqa: E731
    brackets = {}
    if m is Model.NIL:
        names = suite.names
        fs = [lambda u, e=e: e.lift(u) for e in suite.entries]
        for i in range(4):
            for j in range(i + 1, 4):
                v = bracket_fd(fs[i], fs[j], u0, model=m)
                # the two circle components are conjugate: their bracket is 1/p_gamma
                expect = 1.0 / u0[5] if (i, j) == (2, 3) else 0.0
                brackets[f"{{{names[i]},{names[j]}}}"] = v
                _check(checks, f"bracket {{{names[i]},{names[j]}}} - {expect:.6g}", abs(v - expect), TOL_BRACKET)
    elif m is Model.SOL:
        v = bracket_fd(H_f, lambda u: u[4] * u[5], u0, model=m)
        brackets["{g,kappa}"] = v
        _check(checks, "bracket {g,kappa}", abs(v), TOL_BRACKET)
    else:
        for k, name in enumerate(("p_alpha", "p_beta", "p_gamma")):
            v = bracket_fd(H_f, lambda u, k=k: u[3 + k], u0, model=m)
            brackets[f"{{g,{name}}}"] = v
            _check(checks, f"bracket {{g,{name}}}", abs(v), TOL_BRACKET)
    return {
        "model": m.value,
        "p0": [float(v) for v in p],
        "g0": [float(v) for v in g],
        "T": T,
        "h": h,
        "drift": rep.to_dict(),
        "momentum": mom.to_dict(),
        "brackets": brackets,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def _verify_job(args):
    return verify_state(*args)


def cmd_verify(cfg) -> int:
    T, h = float(cfg["T"]), float(cfg["h"])
    jobs = [(cfg["model"], cfg["p"], cfg["g"], T, h)]
    rng = np.random.default_rng(int(cfg["seed"]))
    for _ in range(int(cfg.get("random", 0))):
        jobs.append((cfg["model"], random_regular_momentum(cfg["model"], rng), (0.0, 0.0, 0.0), T, h))
    if int(cfg["jobs"]) > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=int(cfg["jobs"])) as ex:
            runs = list(ex.map(_verify_job, jobs))
    else:
        runs = [_verify_job(j) for j in jobs]
    report = {"backend": BACKEND, "seed": int(cfg["seed"]), "runs": runs, "pass": all(r["pass"] for r in runs)}
    _write_atomic(_out(cfg, ".json"), json.dumps(report, indent=2))
    summary = {"pass": report["pass"], "report": _out(cfg, ".json"),
               "failed": [f"{r['p0']}: {c['name']}" for r in runs for c in r["checks"] if not c["pass"]]}
    _emit(summary)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def cmd_section(cfg) -> int:
    traj = _simulate(cfg)
    sec = poincare_section(traj, SectionSpec(cfg["coordinate"], float(cfg["level"]), int(cfg["direction"])))
    _write_atomic(_out(cfg, ".csv"), sec.to_csv())
    _write_atomic(_out(cfg, ".json"), json.dumps(sec.to_dict()))
    _emit({"crossings": len(sec), "csv": _out(cfg, ".csv")})
    return EXIT_OK


def cmd_rotation(cfg) -> int:
    traj = _simulate(cfg)
    est = rotation_vector(traj, _lattice(cfg))
    _write_atomic(_out(cfg, ".csv"), est.to_csv())
    _write_atomic(_out(cfg, ".json"), json.dumps(est.to_dict(), indent=2))
    _emit(est.to_dict())
    return EXIT_OK


def cmd_lyapunov(cfg) -> int:
    lat = _lattice(cfg)
    lam = lyapunov_max(_state(cfg), lat, float(cfg["T"]), float(cfg["renorm"]), float(cfg["h"]),
                       cfg["scheme"], int(cfg["seed"]))
    out = {"model": cfg["model"], "p0": list(cfg["p"]), "T": float(cfg["T"]), "renorm": float(cfg["renorm"]),
           "lambda": lam, "lattice": lat.name}
    if lat.model is Model.SOL:
        out["monodromyStretch"] = monodromy_stretch(lat)
    _write_atomic(_out(cfg, ".json"), json.dumps(out, indent=2))
    _emit(out)
    return EXIT_OK


def cmd_lattice(cfg) -> int:
    m = Model.parse(cfg["model"])
    if m is Model.SOL and cfg.get("d") is not None:
        spec = sol_lattice(QuadraticField(int(cfg["d"])))
    else:
        if cfg.get("d") is not None:
            raise UsageError("--d applies to the sol model only")
        spec = lattice_for(m, cfg.get("lattice"))
    _emit(spec.to_dict())
    return EXIT_OK


def cmd_pell(cfg) -> int:
    field = QuadraticField(int(cfg["d"]))
    u = fundamental_unit(field, int(cfg["bound"]))
    _emit({"field": field.to_dict(), "unit": u.to_dict()})
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "section": cmd_section,
    "rotation": cmd_rotation,
    "lyapunov": cmd_lyapunov,
    "lattice": cmd_lattice,
    "pell": cmd_pell,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if ns.command == "pell":
            cfg = dict(COMMAND_DEFAULTS["pell"], out=".", prefix=None, command="pell")
            flags = vars(ns)
            if flags.get("config"):
                with open(flags["config"]) as fh:
                    cfg.update(json.load(fh))
            cfg.update({k: v for k, v in flags.items() if k not in ("config", "command")})
        else:
            cfg = resolve_config(ns)
        return COMMANDS[ns.command](cfg)
    except (UsageError, SingularSetError) as err:
        print(f"geoflow: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, LinearRegimeError, StencilError, CapacityError, ReductionError, NotAnosovError) as err:
        print(f"geoflow: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except GeoflowError as err:
        print(f"geoflow: error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"geoflow: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
