"""Command-line front end.

Subcommands ``chi``, ``dynamics``, ``reconstruct``, ``verify`` and
``figures``. Runs are described by a JSON config checked against a strict
schema; every output file embeds the resolved config.

Exit codes: 0 success, 1 verification failure, 2 invalid config or input,
3 solver error, 4 every measured point near-transparent.
"""

import argparse
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import dynamics, io, reconstruct, response, spectral
from .dynamics import SolverConfig
from .errors import BandEdgeError, NearTransparencyError
from .reservoir import (Kind, ReservoirSpec, flipped_branch, gtilde_analytic,
                        gtilde_zero, tabulate)
from .tables import DensityTable

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SOLVER, EXIT_TRANSPARENT = 0, 1, 2, 3, 4

_NUM = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "reservoir": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": [k.value for k in Kind]},
                "gamma": {"type": "number", "minimum": 0},
                "beta": {"type": "number", "minimum": 0},
                "delta_g": _NUM,
                "epsilon": {"type": "number", "minimum": 0},
                "delta_a": _NUM,
                "delta_b": _NUM,
                "table": {"type": "string"},
                "edges": {"type": "array", "items": _NUM},
            },
        },
        "drive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "rabi": {"type": "number", "minimum": 0},
                "detuning": _NUM,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "min": _NUM,
                "max": _NUM,
                "points": {"type": "integer", "minimum": 2},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "mode": {"enum": [m.value for m in dynamics.Mode]},
                "bath_modes": {"type": "integer", "minimum": 1},
                "bath_span": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "seed": {"type": "integer"},
                "initial": {"enum": ["ground", "excited"]},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}

DEFAULTS = {
    "reservoir": {"kind": "OneBand", "gamma": 1.0, "beta": 1.0, "delta_g": 2.0},
    "drive": {"scale": 1.0, "rabi": 0.01, "detuning": 0.0},
    "grid": {"min": -4.0, "max": 6.0, "points": 1001},
    "solver": {},
    "output": {"path": ".", "format": "csv"},
}


class InputError(Exception):
    """Invalid config or input file (CLI exit 2)."""


# -- config --------------------------------------------------------------------

def load_config(path=None, text=None):
    """Parse, validate and fill defaults. Raises :class:`InputError`."""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from None
    raw = {} if text is None else _parse_json(text)
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        lines = [f"  at /{'/'.join(str(p) for p in e.path)}: {e.message}" for e in errors]
        raise InputError("config failed schema validation:\n" + "\n".join(lines))
    cfg = {k: dict(v) for k, v in DEFAULTS.items()}
    for block, values in raw.items():
        if block == "reservoir":
            cfg[block] = {"gamma": 1.0, **values}
        else:
            cfg[block].update(values)
    return cfg


def _parse_json(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from None


def build_spec(block, base=Path(".")):
    kind = Kind(block["kind"])
    g = float(block.get("gamma", 1.0))
    try:
        if kind is Kind.FLAT:
            return ReservoirSpec.flat(g)
        if kind is Kind.ONE_BAND:
            return ReservoirSpec.one_band(block.get("delta_g", 0.0), block.get("beta", 0.0), g)
        if kind is Kind.SMOOTHED:
            return ReservoirSpec.smoothed(block.get("delta_g", 0.0), block.get("beta", 0.0),
                                          block.get("epsilon", 0.0), g)
        if kind is Kind.TWO_BAND:
            return ReservoirSpec.two_band(block.get("delta_a", 0.0), block.get("delta_b", 1.0),
                                          block.get("beta", 0.0), g)
        if "table" not in block:
            raise InputError("Tabulated reservoir needs a 'table' CSV path")
        text = (base / block["table"]).read_text()
        table = DensityTable.from_csv(text, edges=block.get("edges", ()),
                                      metadata={"source": block["table"]})
        return ReservoirSpec.tabulated(table, g)
    except (ValueError, OSError) as exc:
        raise InputError(f"invalid reservoir: {exc}") from None


def build_solver(block, seed=None):
    kw = {k: v for k, v in block.items() if k != "initial"}
    if seed is not None:
        kw["seed"] = seed
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise InputError(f"invalid solver block: {exc}") from None


def _grid(block):
    lo, hi, n = float(block["min"]), float(block["max"]), int(block["points"])
    if not lo < hi:
        raise InputError("grid needs min < max")
    return np.linspace(lo, hi, n)


def _threads():
    try:
        return max(1, int(os.environ.get("BANDEDGE_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    # executor.map keeps input order, so outputs stay deterministic
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        return list(ex.map(fn, items))


# -- subcommands ---------------------------------------------------------------

def _write_curve(c, out, stem, fmt, cfg):
    if fmt == "csv":
        io.atomic_write(out / f"{stem}.csv", io.curve_csv(c))
        return [out / f"{stem}.csv"]
    io.atomic_write(out / f"{stem}.json", io.json_text({"config": cfg, **io.curve_dict(c)}))
    return [out / f"{stem}.json"]


def cmd_chi(cfg, out, fmt):
    spec = build_spec(cfg["reservoir"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        c = response.curve(spec, _grid(cfg["grid"]), cfg["drive"]["scale"])
    for w in caught:
        print(f"note: {w.message}", file=sys.stderr)
    return _write_curve(c, out, "chi", fmt, cfg)


def cmd_dynamics(cfg, out, fmt, seed=None):
    spec = build_spec(cfg["reservoir"])
    solver = build_solver(cfg["solver"], seed)
    drive = cfg["drive"]
    kw = {}
    if solver.mode is dynamics.Mode.DISCRETE_BATH and cfg["solver"].get("initial") == "excited":
        kw["initial"] = (0.0, 1.0)
    traj = dynamics.evolve(spec, drive["detuning"], drive["rabi"], solver, **kw)
    summary = {"config": cfg, "reservoir": spec.to_dict(), "solver": solver.to_dict()}
    ss = dynamics.steady_state(traj)
    summary["steady_state"] = [ss.value.real, ss.value.imag]
    summary["drift"] = ss.drift
    if drive["rabi"] > 0:
        chi = -drive["scale"] * np.conj(ss.value / drive["rabi"])
        summary["chi"] = [chi.real, chi.imag]
    if traj.norm is not None:
        summary["max_norm_error"] = float(np.max(np.abs(traj.norm - 1.0)))
    summary.update(traj.meta)
    written = []
    if fmt == "csv":
        written.append(io.atomic_write(out / "trajectory.csv", io.trajectory_csv(traj)))
    else:
        written.append(io.atomic_write(out / "trajectory.json",
                                       io.json_text(io.trajectory_dict(traj))))
    if traj.bath is not None:
        written.append(io.atomic_write(out / "bath.csv", io.bath_csv(traj)))
    written.append(io.atomic_write(out / "summary.json", io.json_text(summary)))
    return written


def cmd_reconstruct(m, window, out):
    rep = reconstruct.reconstruct(m, window)
    doc = {"scale": m.scale, "gamma": m.gamma, **rep.to_dict()}
    return [io.atomic_write(out / "report.json", io.json_text(doc)),
            io.atomic_write(out / "profile.csv", rep.profile.to_csv())]


def figure_curves(threads_map=_pmap):
    """Reference curves on ``[-4, 6]``: (name, curve) pairs."""
    grid = np.linspace(-4.0, 6.0, 1001)
    specs = [("oneband", ReservoirSpec.one_band(2.0, 1.0, 1.0))]
    specs += [(f"smoothed_eps{e:g}", ReservoirSpec.smoothed(2.0, 1.0, e, 1.0))
              for e in (0.01, 0.1, 1.0)]
    specs.append(("twoband", ReservoirSpec.two_band(1.0, 2.0, 1.0, 1.0)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # edge points are expected here
        curves = threads_map(lambda s: response.curve(s[1], grid), specs)
    return [(name, c) for (name, _), c in zip(specs, curves)]


def cmd_figures(out, fmt):
    written = []
    for name, c in figure_curves():
        written += _write_curve(c, out, name, fmt, {"dataset": name,
                                                    "reservoir": c.spec.to_dict()})
    return written


# -- verification --------------------------------------------------------------

class Check:
    def __init__(self, name, value, tol, ok, detail=""):
        self.name, self.value, self.tol, self.ok, self.detail = name, value, tol, ok, detail


def _rel(a, b):
    return abs(a - b) / abs(b)


def _three_routes():
    spec = ReservoirSpec.one_band(2.0, 1.0, 1.0)
    closed = complex(response.susceptibility_closed_form(spec, 0.0))
    table = tabulate(spec)
    g0 = complex(spectral.gtilde_zero_numeric(table, 0.0)) + 0.5
    pv = -1.0 / (0.0 - 1j * np.conj(g0))
    dyn = dynamics.susceptibility_from_dynamics(
        spec, 0.0, 0.01, 1.0, SolverConfig(step=0.005, horizon=200.0))
    return closed, pv, dyn


def _random_models(rng, n):
    out = []
    for _ in range(n):
        k = rng.integers(4)
        b, g = rng.uniform(0.1, 3.0), rng.uniform(0.0, 2.0)
        if k == 0:
            out.append(ReservoirSpec.flat(g))
        elif k == 1:
            out.append(ReservoirSpec.one_band(rng.uniform(-3, 3), b, g))
        elif k == 2:
            out.append(ReservoirSpec.smoothed(rng.uniform(-3, 3), b, rng.uniform(0.001, 2), g))
        else:
            a = rng.uniform(-3, 2)
            out.append(ReservoirSpec.two_band(a, a + rng.uniform(0.1, 3), b, g))
    return out


def branch_consistency(n=1000, s=1e-8, seed=0):
    """Worst relative gap between ``G~(s)`` at small ``s`` and ``G~(0)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for spec in _random_models(rng, n):
        d = rng.uniform(-6, 6)
        if any(abs(d - e) < 0.05 for e in spec.edges):
            d += 0.1
        g0 = complex(gtilde_zero(spec, d))
        gs = complex(gtilde_analytic(spec, s, d))
        worst = max(worst, abs(gs - g0) / max(1.0, abs(g0)))
    return worst


def verify_checks(level="quick", flip_branch=False):
    checks = []

    def run():
        closed, pv, dyn = _three_routes()
        detail = (f"closed {closed:.9f} | pv-numeric {pv:.9f} | dynamics {dyn:.9f}")
        worst = max(_rel(pv, closed), _rel(dyn, closed), _rel(dyn, pv))
        checks.append(Check("three-route chi (OneBand, delta=0)", worst, 1e-3,
                            worst <= 1e-3, detail))

        n = 200 if level == "quick" else 1000
        worst = branch_consistency(n)
        checks.append(Check("branch consistency G~(1e-8) vs G~(0)", worst, 1e-4,
                            worst <= 1e-4))

        rng = np.random.default_rng(1)
        worst = 0.0
        for spec in _random_models(rng, 200):
            if spec.kind is Kind.FLAT:
                continue
            d = rng.uniform(-6, 6, 50)
            d = d[[all(abs(x - e) > 1e-6 for e in spec.edges) for x in d]]
            a = np.atleast_1d(response.susceptibility(spec, d))
            b = np.atleast_1d(response.susceptibility_closed_form(spec, d))
            worst = max(worst, float(np.max(np.abs(a - b) / np.abs(b))))
        checks.append(Check("closed form vs generic chi", worst, 1e-12, worst <= 1e-12))

        one = response.transparency_points(ReservoirSpec.one_band(2, 1, 1), (-4, 6))
        two = response.transparency_points(ReservoirSpec.two_band(1, 2, 1, 1), (-4, 6))
        err = (max(abs(one[0] - 2), abs(two[0] - 1), abs(two[1] - 2))
               if len(one) == 1 and len(two) == 2 else np.inf)
        checks.append(Check("transparency points", err, 1e-10, err <= 1e-10,
                            f"one-band {one}, two-band {two}"))

        worst = 0.0
        for spec in _random_models(np.random.default_rng(2), 300):
            absn = -np.atleast_1d(response.susceptibility(spec, np.linspace(-8, 8, 801))).imag
            worst = min(worst, float(absn.min()))
        checks.append(Check("passivity (min absorption)", worst, 0.0, worst >= 0.0))

        grid = np.linspace(-2, 6, 801)
        spec = ReservoirSpec.one_band(2, 1, 1)
        rep = reconstruct.reconstruct(reconstruct.synthesize_measurement(spec, grid), (2.05, 6))
        from .reservoir import spectral_weight
        exact = np.atleast_1d(spectral_weight(spec, rep.profile.omega_grid))
        err = float(np.max(np.abs(rep.profile.gamma_values - exact)))
        fit = rep.edge_fit
        ok = err <= 1e-9 and fit is not None
        detail = (f"omega_g {fit.omega_g:.6f}, beta {fit.beta:.6f}" if fit
                  else "edge fit missing")
        checks.append(Check("reconstruction round trip", err, 1e-9, ok, detail))

        if level == "full":
            cfg = SolverConfig(step=0.01, horizon=5.0, mode="DiscreteBath",
                               bath_modes=4000, bath_span=(-80.0, 80.0))
            tr = dynamics.evolve_discrete_bath(ReservoirSpec.flat(1.0), 0.0, 0.0, cfg,
                                               initial=(0.0, 1.0))
            err = float(np.max(np.abs(np.abs(tr.a1) ** 2 / np.exp(-tr.times) - 1)))
            checks.append(Check("discrete-bath flat decay", err, 0.02, err <= 0.02))
            nerr = float(np.max(np.abs(tr.norm - 1)))
            checks.append(Check("discrete-bath norm", nerr, 1e-8, nerr <= 1e-8))
            cfg = SolverConfig(step=0.01, horizon=60.0, mode="DiscreteBath",
                               bath_modes=8000, bath_span=(2.0, 102.0))
            tr = dynamics.evolve_discrete_bath(ReservoirSpec.one_band(2, 1, 0), 0.0, 0.0,
                                               cfg, initial=(0.0, 1.0))
            plateau = float(np.mean(np.abs(tr.a1[tr.times > 40]) ** 2))
            checks.append(Check("in-gap population plateau", plateau, 0.1, plateau > 0.1))

    if flip_branch:
        with flipped_branch():
            run()
    else:
        run()
    return checks


def print_checks(checks, stream=None):
    stream = stream or sys.stdout
    w = max(len(c.name) for c in checks)
    print(f"{'check':<{w}}  {'value':>12}  {'tol':>9}  result", file=stream)
    for c in checks:
        print(f"{c.name:<{w}}  {c.value:>12.3e}  {c.tol:>9.1e}  "
              f"{'PASS' if c.ok else 'FAIL'}", file=stream)
        if c.detail:
            print(f"{'':<{w}}    {c.detail}", file=stream)


# -- entry point ---------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="bandedge",
                                description="Band-edge susceptibility toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--out", help="output directory (overrides output.path)")
        sp.add_argument("--format", choices=["csv", "json"], help="output format")
        if seed:
            sp.add_argument("--seed", type=int, help="override solver.seed")

    common(sub.add_parser("chi", help="susceptibility curve"))
    common(sub.add_parser("dynamics", help="time-domain trajectory"), seed=True)
    r = sub.add_parser("reconstruct", help="invert measured susceptibility")
    common(r)
    r.add_argument("--input", required=True, help="CSV with delta,re_chi,im_chi")
    r.add_argument("--gamma", type=float, default=1.0)
    r.add_argument("--scale", type=float, default=1.0)
    r.add_argument("--noise", type=float, default=0.0, metavar="SIGMA",
                   help="per-component noise level of the measurement")
    r.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"),
                   help="edge-fit window")
    v = sub.add_parser("verify", help="cross-oracle verification suite")
    v.add_argument("level", nargs="?", choices=["quick", "full"], default="quick")
    v.add_argument("--flip-branch", action="store_true", help=argparse.SUPPRESS)
    common(sub.add_parser("figures", help="reference curve datasets"))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            t0 = time.perf_counter()
            checks = verify_checks(args.level, args.flip_branch)
            print_checks(checks)
            failed = [c.name for c in checks if not c.ok]
            print(f"{len(checks) - len(failed)}/{len(checks)} checks passed "
                  f"in {time.perf_counter() - t0:.1f} s")
            if failed:
                print("FAILED: " + ", ".join(failed))
                return EXIT_VERIFY
            return EXIT_OK

        cfg = load_config(args.config)
        out = Path(args.out or cfg["output"]["path"])
        fmt = args.format or cfg["output"]["format"]
        if args.command == "chi":
            written = cmd_chi(cfg, out, fmt)
        elif args.command == "dynamics":
            written = cmd_dynamics(cfg, out, fmt, args.seed)
        elif args.command == "figures":
            written = cmd_figures(out, fmt)
        else:
            try:
                text = Path(args.input).read_text()
                m = io.read_measurement(text, scale=args.scale, gamma=args.gamma,
                                       noise_sigma=args.noise)
            except (OSError, ValueError) as exc:
                raise InputError(f"cannot read measurement: {exc}") from None
            written = cmd_reconstruct(m, args.window, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NearTransparencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPARENT
    except BandEdgeError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
