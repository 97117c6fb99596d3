"""``hopfion`` command line: init, relax, charge, trace, export, glcheck.

Parameters come from an INI file (``--config``) whose sections mirror the
library objects, with command-line flags taking precedence::

    [grid]      n, nx, ny, nz, half_width, boundary
    [ansatz]    m, k, profile, core_radius, perturb, perturb_seed
    [model]     a, b
    [relax]     any RelaxParams field
    [trace]     step, max_steps, closure_tol, interp, values
    [glcheck]   n, half_width, boundary, count, kmax, amplitude

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
failure (relaxation not converged, vortex, missing preimage, ...), 3 I/O.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
from scipy import fft as sp_fft

from . import __version__
from .ansatz import AnsatzSpec, Profile, build_ansatz, perturb
from .energy import energy_densities
from .errors import ConfigError, FormatError, HopfionError
from .fieldio import (atomic_write_bytes, encode_field, read_director, read_field, read_scalar, read_vector,
                      vtk_polylines, vtk_structured_points, write_field, write_json)
from .fieldlines import DEFAULT_VALUES, TraceParams, linking_number, trace_preimage
from .lattice import Boundary, Grid
from .relax import RelaxParams, RunWriter, Status, relax
from .topology import CHARGE_ORDER, charge_report, compute_H

log = logging.getLogger("hopfion")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

SECTIONS = {
    "grid": {"n": int, "nx": int, "ny": int, "nz": int, "half_width": float, "boundary": str},
    "ansatz": {"m": int, "k": int, "profile": str, "core_radius": float, "perturb": float, "perturb_seed": int},
    "model": {"a": float, "b": float},
    "relax": {f.name: (int if f.name in ("flat_window", "max_steps", "charge_check_every",
                                         "checkpoint_every", "seed") else float)
              for f in fields(RelaxParams)},
    "trace": {"step": float, "max_steps": int, "closure_tol": float, "interp": str, "values": str},
    "glcheck": {"n": int, "half_width": float, "boundary": str, "count": int, "kmax": float,
                "amplitude": float},
}


# -- configuration -----------------------------------------------------------

def load_config(path) -> dict:
    """Typed ``{section: {key: value}}``; unknown sections or keys are errors."""
    out = {s: {} for s in SECTIONS}
    if path is None:
        return out
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SECTIONS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            try:
                out[sec][key] = SECTIONS[sec][key](raw)
            except ValueError:
                raise ConfigError(f"[{sec}] {key} = {raw!r} is not a valid value") from None
    return out


def _override(cfg: dict, section: str, args, names):
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            cfg[section][name] = v


def _boundary(name: str) -> Boundary:
    table = {"fixed": Boundary.FIXED_VACUUM, "fixed_vacuum": Boundary.FIXED_VACUUM,
             "periodic": Boundary.PERIODIC}
    try:
        return table[name.lower()]
    except KeyError:
        raise ConfigError(f"boundary must be 'fixed' or 'periodic', not {name!r}") from None


def make_grid(sec: dict, default_n: int = 48, default_hw: float = 6.0) -> Grid:
    hw = sec.get("half_width", default_hw)
    bc = _boundary(sec.get("boundary", "fixed"))
    n = sec.get("n", default_n)
    nx, ny, nz = (sec.get(k, n) for k in ("nx", "ny", "nz"))
    cube = Grid.cube(n, hw, bc)
    if (nx, ny, nz) == (n, n, n):
        return cube
    return Grid(nx, ny, nz, cube.h, tuple(-0.5 * cube.h * ((m - 1) if not cube.periodic else m)
                                          for m in (nx, ny, nz)), bc)


def make_ansatz_spec(sec: dict, grid: Grid) -> AnsatzSpec:
    hw = float(min(grid.upper - np.asarray(grid.origin))) / 2
    try:
        profile = Profile(sec.get("profile", "gaussian"))
    except ValueError:
        raise ConfigError(f"unknown profile {sec.get('profile')!r}") from None
    return AnsatzSpec(sec.get("m", 1), sec.get("k", 1), hw, profile, sec.get("core_radius"))


def make_relax_params(sec: dict) -> RelaxParams:
    p = RelaxParams(**sec)
    p.validate()
    return p


def make_trace_params(sec: dict) -> TraceParams:
    kw = {k: v for k, v in sec.items() if k != "values"}
    if kw.get("interp", "cubic") not in ("cubic", "linear"):
        raise ConfigError("interp must be 'cubic' or 'linear'")
    return TraceParams(**kw)


def parse_values(text) -> list:
    """``"x,y,z; x,y,z"`` (or a list of ``"x,y,z"`` strings) -> list of unit 3-vectors."""
    parts = text if isinstance(text, list) else [t for t in str(text).split(";") if t.strip()]
    out = []
    for part in parts:
        try:
            v = np.array([float(c) for c in part.split(",")])
        except ValueError:
            raise ConfigError(f"bad target value {part!r}") from None
        if v.shape != (3,) or np.linalg.norm(v) == 0:
            raise ConfigError(f"target value {part!r} must be a nonzero 3-vector")
        out.append(v / np.linalg.norm(v))
    return out


def _out_dir(args) -> Path:
    d = Path(args.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit(obj: dict, path: Path | None = None):
    if path is not None:
        write_json(path, obj)
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- commands ------------------------------------------------------------------

def cmd_init(args, cfg) -> int:
    _override(cfg, "grid", args, ("n", "half_width", "boundary"))
    _override(cfg, "ansatz", args, ("m", "k", "profile", "core_radius", "perturb"))
    grid = make_grid(cfg["grid"])
    try:
        spec = make_ansatz_spec(cfg["ansatz"], grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    amp = cfg["ansatz"].get("perturb", 0.0)
    seed = args.seed if args.seed is not None else cfg["ansatz"].get("perturb_seed", 0)
    if not 0.0 <= amp <= 0.2:
        raise ConfigError("perturb must lie in [0, 0.2]")
    n = build_ansatz(grid, spec)
    if amp > 0:
        n = perturb(n, amp, seed)
    out = _out_dir(args)
    write_field(out / "init.hpfn", n)
    meta = {"command": "init", "version": __version__, "grid": _grid_dict(grid),
            "ansatz": {"m": spec.m, "k": spec.k, "profile": spec.profile.value,
                       "core_radius": spec.core_radius, "half_width": spec.half_width},
            "perturb": amp, "seed": seed}
    _emit(meta, out / "init.json")
    return EXIT_OK


def _grid_dict(g: Grid) -> dict:
    return {"shape": list(g.shape), "h": g.h, "origin": list(g.origin), "boundary": g.boundary.name}


def cmd_relax(args, cfg) -> int:
    _override(cfg, "relax", args, ("max_steps",))
    params = make_relax_params(cfg["relax"])
    a, b = cfg["model"].get("a", 1.0), cfg["model"].get("b", 1.0)
    if not (a > 0 and b > 0):
        raise ConfigError("couplings a and b must be positive")
    n = read_director(args.input)
    params.resolved(n.grid.h)  # validates the defaults against this grid
    out = _out_dir(args)
    writer = RunWriter(out, params, a, b, extra={"input": str(args.input), "version": __version__})
    state = relax(n, params, a, b, writer=writer)
    _emit(state.summary())
    if state.status != Status.CONVERGED:
        log.error("relaxation ended with status %s: %s", state.status.value, state.message)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_charge(args, cfg) -> int:
    n = read_director(args.input)
    rep = charge_report(n, linking=not args.no_linking)
    _emit(rep.to_dict(), Path(args.out) / "charge.json" if args.out else None)
    return EXIT_OK


def cmd_trace(args, cfg) -> int:
    sec = cfg["trace"]
    if args.value:
        values = parse_values(args.value)
    elif "values" in sec:
        values = parse_values(sec["values"])
    else:
        values = [np.asarray(v) for v in DEFAULT_VALUES]
    params = make_trace_params(sec)
    n = read_director(args.input)
    H = compute_H(n, CHARGE_ORDER)
    lines = [trace_preimage(n, v, H, params) for v in values]
    out = _out_dir(args)
    report = {"lines": []}
    for i, line in enumerate(lines):
        atomic_write_bytes(out / f"line_{i}.csv", line.to_csv().encode())
        report["lines"].append({"value": [float(c) for c in line.n_value], "closed": line.closed,
                                "points": len(line.points), "length": line.length, "drift": line.drift,
                                "reason": line.reason})
    atomic_write_bytes(out / "lines.vtk", vtk_polylines(lines).encode())
    if len(lines) == 2:
        report["linking_number"] = linking_number(lines[0], lines[1]).number
    _emit(report, out / "trace.json")
    return EXIT_OK


def cmd_export(args, cfg) -> int:
    fmt = args.format.lower()
    if fmt not in ("vtk", "csv", "hpfn"):
        raise ConfigError(f"unknown export format {args.format!r}")
    out = _out_dir(args)
    stem = Path(args.input).stem
    grid, data = read_field(args.input)
    if fmt == "hpfn":
        atomic_write_bytes(out / f"{stem}.hpfn", encode_field(data, grid))
        return EXIT_OK
    arrays = {}
    if data.shape[3] == 3 and np.allclose(np.linalg.norm(data, axis=-1), 1.0, atol=1e-6):
        d2, d4 = energy_densities(data, grid, 1.0, 1.0)
        arrays = {"n": data, "energy_density": d2 + d4}
    else:
        arrays = {f"c{i}": data[..., i] for i in range(data.shape[3])}
    if fmt == "vtk":
        atomic_write_bytes(out / f"{stem}.vtk", vtk_structured_points(grid, arrays, stem).encode())
    else:
        pos = grid.positions().reshape(-1, 3)
        cols, names = [pos], ["x", "y", "z"]
        for name, arr in arrays.items():
            arr = arr.reshape(len(pos), -1)
            cols.append(arr)
            names += [f"{name}{i + 1}" for i in range(arr.shape[1])] if arr.shape[1] > 1 else [name]
        table = np.hstack(cols)
        text = ",".join(names) + "\n" + "\n".join(",".join(f"{v:.10g}" for v in row) for row in table) + "\n"
        atomic_write_bytes(out / f"{stem}.csv", text.encode())
    return EXIT_OK


def cmd_glcheck(args, cfg) -> int:
    from . import glmap

    sec = cfg["glcheck"]
    _override(cfg, "glcheck", args, ("n", "half_width", "count"))
    seed = args.seed if args.seed is not None else 0
    if args.psi1 or args.psi2 or args.A:
        if not (args.psi1 and args.psi2 and args.A):
            raise ConfigError("--psi1, --psi2 and --A must be given together")
        p1, p2, A = read_scalar(args.psi1), read_scalar(args.psi2), read_vector(args.A)
        if not (p1.grid == p2.grid == A.grid):
            raise ConfigError("GL input fields live on different grids")
        samples = [glmap.GLFields(p1.grid, p1.data, p2.data, A.data)]
    else:
        grid = make_grid(sec, default_n=32, default_hw=4.0)
        kw = {k: sec[k] for k in ("kmax", "amplitude") if k in sec}
        samples = [glmap.random_fields(grid, seed + i, **kw) for i in range(sec.get("count", 1))]
    reports = [glmap.identity_report(f, seed=seed) for f in samples]
    out = reports[0] if len(reports) == 1 else {
        "samples": reports, "max_rel_diff": max(r["rel_diff"] for r in reports)}
    _emit(out, Path(args.out) / "glcheck.json" if args.out else None)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [grid], [ansatz], [model], [relax], [trace], [glcheck]")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--workers", type=int, help="FFT thread cap (default: $HPFN_WORKERS or 1)")
    common.add_argument("--seed", type=int, help="seed for perturbations and random fields")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hopfion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("init", parents=[common], help="write a Hopf ansatz field")
    q.add_argument("--n", type=int)
    q.add_argument("--half-width", type=float)
    q.add_argument("--boundary")
    q.add_argument("--m", type=int)
    q.add_argument("--k", type=int)
    q.add_argument("--profile")
    q.add_argument("--core-radius", type=float)
    q.add_argument("--perturb", type=float)

    q = sub.add_parser("relax", parents=[common], help="relax a field by gradient flow")
    q.add_argument("input")
    q.add_argument("--max-steps", type=int)

    q = sub.add_parser("charge", parents=[common], help="Hopf charge report (JSON)")
    q.add_argument("input")
    q.add_argument("--no-linking", action="store_true", help="skip the preimage linking evaluator")

    q = sub.add_parser("trace", parents=[common], help="trace preimage lines")
    q.add_argument("input")
    q.add_argument("--value", action="append", help="target value x,y,z (repeatable)")

    q = sub.add_parser("export", parents=[common], help="convert a field for viewers")
    q.add_argument("input")
    q.add_argument("--format", default="vtk", help="vtk, csv or hpfn")

    q = sub.add_parser("glcheck", parents=[common], help="GL reparameterization identity check")
    q.add_argument("--psi1", help="complex scalar field file")
    q.add_argument("--psi2", help="complex scalar field file")
    q.add_argument("--A", help="vector potential field file")
    q.add_argument("--n", type=int)
    q.add_argument("--half-width", type=float)
    q.add_argument("--count", type=int)
    return p


COMMANDS = {"init": cmd_init, "relax": cmd_relax, "charge": cmd_charge, "trace": cmd_trace,
            "export": cmd_export, "glcheck": cmd_glcheck}


def _workers(args) -> int:
    if args.workers is not None:
        w = args.workers
    else:
        try:
            w = int(os.environ.get("HPFN_WORKERS", "1"))
        except ValueError:
            raise ConfigError("HPFN_WORKERS must be an integer") from None
    if w < 1:
        raise ConfigError("workers must be >= 1")
    return w


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        workers = _workers(args)
        with sp_fft.set_workers(workers):
            return COMMANDS[args.command](args, cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HopfionError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
