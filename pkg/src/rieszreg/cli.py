"""Command-line interface: energy reports, profile dumps, sweeps, validation.

Every command writes CSV with a ``#``-prefixed header block (version,
config, config hash) so that plot scripts and CI diffs can both consume
the same file.  Values are printed with 17 significant digits; identical
configurations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .closed_energy import continuation, residue_table
from .domain_energy import domain_residues
from .errors import InvalidParams, RieszError, UnknownShape
from .extrinsic import domain_pair_profile, pair_profile, psi_pointwise
from .moebius import (MoebiusMap, _value_and_error, compose, homothety,
                      invariance_check, inversion, translation)
from .shapes import Domain, parse_shape_spec

__version__ = "0.1.0"

POLE_HIT_TOL = 1e-9


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation, fully determining the output."""

    command: str
    shape: str | None = None
    z_values: tuple[float, ...] = ()
    z_grid: tuple[float, float, int] | None = None
    eps_schedule: tuple[float, float, int] | None = None
    tol: float = 1e-6
    out: str | None = None
    fmt: str = "csv"
    map_spec: str | None = None
    where: float = 0.0
    t_grid: tuple[float, float, int] | None = None
    threads: int | None = None
    checks: tuple[str, ...] = ()

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.fmt != "csv":
            raise ValueError(f"unsupported format {self.fmt!r}")
        if self.z_grid is not None and self.z_grid[2] < 2:
            raise ValueError("z-grid needs at least 2 points")

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=list)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


def _grid_points(grid: tuple[float, float, int]) -> np.ndarray:
    lo, hi, n = grid
    return np.linspace(lo, hi, int(n))


def _check_grid_off_poles(cfg: RunConfig, shape) -> None:
    """The sweep grid must not hit a pole exactly (no pole removal here)."""
    if cfg.z_grid is None:
        return
    poles = (domain_residues(shape) if isinstance(shape, Domain)
             else residue_table(shape))
    for z in _grid_points(cfg.z_grid):
        for k in poles:
            if abs(z - k) < POLE_HIT_TOL:
                raise ValueError(
                    f"z-grid hits the pole z = {k}; use the energy or "
                    "residues command, which remove the pole")


# ---------------------------------------------------------------------------
# map grammar: homothety(c) | translation(dx,dy[,dz]) |
#              inversion(cx,cy[,cz],R), factors joined by '*'


def parse_map_spec(spec: str) -> MoebiusMap:
    """Parse a Moebius map such as ``homothety(2)*inversion(3,0,1)``."""
    factors = []
    for part in spec.split("*"):
        part = part.strip()
        if "(" not in part or not part.endswith(")"):
            raise ValueError(f"bad map factor {part!r}")
        name, inner = part[:-1].split("(", 1)
        try:
            args = [float(a) for a in inner.split(",") if a.strip()]
        except ValueError:
            raise ValueError(f"non-numeric argument in {part!r}") from None
        name = name.strip()
        if name == "homothety":
            if len(args) != 1:
                raise ValueError("homothety takes one ratio")
            factors.append(homothety(args[0]))
        elif name == "translation":
            if len(args) not in (2, 3):
                raise ValueError("translation takes 2 or 3 components")
            factors.append(translation(args))
        elif name == "inversion":
            if len(args) not in (3, 4):
                raise ValueError(
                    "inversion takes a 2- or 3-dim center then a radius")
            factors.append(inversion(args[:-1], args[-1]))
        else:
            raise ValueError(f"unknown map {name!r}")
    return factors[0] if len(factors) == 1 else compose(*factors)


# ---------------------------------------------------------------------------
# formatting


def _fmt(x) -> str:
    """17-significant-digit, locale-independent scalar formatting."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    c = complex(x)
    if abs(c.imag) <= 1e-12 * (1.0 + abs(c.real)):
        return f"{c.real:.17g}"
    return f"{c.real:.17g}{c.imag:+.17g}j"


def _write_report(cfg: RunConfig, columns, rows, figure=None) -> None:
    lines = [f"# rieszreg {__version__}",
             f"# command: {cfg.command}",
             f"# config: {cfg.canonical()}",
             f"# config-hash: {cfg.digest()}",
             "# columns: " + ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        if figure is not None:
            figure(os.path.splitext(cfg.out)[0] + ".png")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _energy_method_label(shape, z: float) -> str:
    if isinstance(shape, Domain):
        res = domain_residues(shape)
        k = int(round(-z))
        if abs(z + k) < POLE_HIT_TOL and -k in res:
            return "pole-removed"
        if abs(z + 2.0) < POLE_HIT_TOL and shape.dim > 2:
            return "profile-continuation"
        return "boundary-integral"
    k = int(round(-z))
    if abs(z + k) < POLE_HIT_TOL and -k in residue_table(shape):
        return "pole-removed"
    return "hadamard"


def cmd_energy(cfg: RunConfig) -> int:
    shape = parse_shape_spec(cfg.shape)
    zs = list(cfg.z_values)
    if cfg.z_grid is not None:
        _check_grid_off_poles(cfg, shape)
        zs += list(_grid_points(cfg.z_grid))
    if not zs:
        raise ValueError("energy needs --z or --z-grid")
    rows = []
    for z in zs:
        value, residue, err = _value_and_error(shape, complex(z))
        rows.append((z, value, _energy_method_label(shape, z),
                     residue, err))
    _write_report(cfg, ("z", "value", "method", "residue",
                        "error_estimate"), rows)
    return 0


def cmd_residues(cfg: RunConfig) -> int:
    shape = parse_shape_spec(cfg.shape)
    if isinstance(shape, Domain):
        table = domain_residues(shape)

        def F(z):
            return _value_and_error(shape, complex(z))[0]
    else:
        table = residue_table(shape)
        F = continuation(shape)
    rows = []
    h = 1e-3
    for k in sorted(table, reverse=True):
        want = table[k]
        # antisymmetric difference around the pole isolates the residue
        est = h * (F(k + h) - F(k - h)) / 2.0
        rows.append((float(k), want, "curvature-integral",
                     want, abs(complex(est).real - want)))
    _write_report(cfg, ("z", "residue", "method", "residue_check",
                        "error_estimate"), rows)
    return 0


def cmd_psi(cfg: RunConfig) -> int:
    shape = parse_shape_spec(cfg.shape)
    if isinstance(shape, Domain):
        prof = domain_pair_profile(shape)
        grid = cfg.t_grid or (0.0, prof.t_max, 129)
        t = _grid_points(grid)
        hi = np.asarray(prof(t), dtype=float)
        lo = hi  # closed-form profile: no grid error
        method = "closed-form"
    else:
        prof = pair_profile(shape, exact=False)
        grid = cfg.t_grid or (0.0, prof.t_max, 129)
        t = _grid_points(grid)
        hi = psi_pointwise(shape, cfg.where, t)
        lo = psi_pointwise(shape, cfg.where, t,
                           inner_factor=4096, n_grid=512)
        method = "chord-counting"
    rows = [(ti, vi, method, abs(vi - li) + 1e-12)
            for ti, vi, li in zip(t, hi, lo)]

    def figure(path):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(t, hi, lw=1.5)
        ax.set_xlabel("t")
        ax.set_ylabel(r"$\psi_x(t)$")
        ax.set_title(f"{cfg.shape} at x({cfg.where:g})")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    _write_report(cfg, ("t", "psi", "method", "error_estimate"),
                  rows, figure)
    return 0


def cmd_beta_sweep(cfg: RunConfig) -> int:
    shape = parse_shape_spec(cfg.shape)
    if cfg.z_grid is None:
        raise ValueError("beta-sweep needs --z-grid lo:hi:n")
    _check_grid_off_poles(cfg, shape)
    zs = _grid_points(cfg.z_grid)
    poles = sorted(domain_residues(shape) if isinstance(shape, Domain)
                   else residue_table(shape))
    rows = []
    vals = []
    for z in zs:
        value, residue, err = _value_and_error(shape, complex(z))
        vals.append(complex(value).real)
        rows.append((float(z), value, "profile-continuation",
                     residue, err))

    def figure(path):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6.5, 4))
        ax.plot(zs, vals, lw=1.5)
        lo, hi = float(zs.min()), float(zs.max())
        for k in poles:
            if lo <= k <= hi:
                ax.axvline(k, color="crimson", ls="--", lw=1.0)
                ax.annotate(f"pole z={k}", (k, 0.0),
                            xytext=(3, 6), textcoords="offset points",
                            rotation=90, fontsize=8, color="crimson")
        ax.set_xlabel("z")
        ax.set_ylabel("B(z)")
        ax.set_title(cfg.shape)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    _write_report(cfg, ("z", "value", "method", "residue",
                        "error_estimate"), rows, figure)
    return 0


def cmd_moebius_check(cfg: RunConfig) -> int:
    shape = parse_shape_spec(cfg.shape)
    if not cfg.map_spec:
        raise ValueError("moebius-check needs --map")
    T = parse_map_spec(cfg.map_spec)
    if not cfg.z_values:
        raise ValueError("moebius-check needs --z")
    rows = []
    for z in cfg.z_values:
        out = invariance_check(shape, z, T)
        rows.append((z, out["value_original"], out["value_image"],
                     out["defect"], out["bound"], out["passed"],
                     "invariance-check",
                     math.hypot(out["error_original"],
                                out["error_image"])))
    _write_report(cfg, ("z", "value_original", "value_image", "defect",
                        "bound", "passed", "method", "error_estimate"),
                  rows)
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    from .validation import run_all
    results = run_all(list(cfg.checks) or None)
    for r in results:
        print(r.line())
    rows = [(r.name, r.passed, r.measured, r.tolerance, "validation",
             r.measured) for r in results]
    if cfg.out:
        _write_report(cfg, ("check", "passed", "measured", "tolerance",
                            "method", "error_estimate"), rows)
    return 0 if all(r.passed for r in results) else 3


COMMANDS = {
    "energy": cmd_energy,
    "residues": cmd_residues,
    "psi": cmd_psi,
    "beta-sweep": cmd_beta_sweep,
    "moebius-check": cmd_moebius_check,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# argument parsing


def _parse_triple(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected lo:hi:n")
    return (float(parts[0]), float(parts[1]), int(parts[2]))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rieszreg",
        description="Regularized Riesz energies of curves, surfaces, "
                    "and domains")
    p.add_argument("--version", action="version",
                   version=f"rieszreg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--shape", help="shape spec, e.g. 'circle(r=1)'")
        sp.add_argument("--z", type=float, action="append", default=[],
                        help="exponent; repeatable")
        sp.add_argument("--z-grid", type=_parse_triple, default=None,
                        metavar="LO:HI:N")
        sp.add_argument("--t-grid", type=_parse_triple, default=None,
                        metavar="LO:HI:N")
        sp.add_argument("--eps-schedule", type=_parse_triple, default=None,
                        metavar="EPS0:RATIO:N")
        sp.add_argument("--tol", type=float, default=1e-6)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", dest="fmt", default="csv")
        sp.add_argument("--map", dest="map_spec", default=None,
                        help="e.g. 'inversion(3,0.5,1)' or "
                             "'homothety(2)*translation(1,0)'")
        sp.add_argument("--x", dest="where", type=float, default=0.0,
                        help="parameter point for the psi command")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--check", dest="checks", action="append",
                        default=[], help="validate: run matching checks")
    return p


def _apply_threads(threads: int | None) -> None:
    n = threads if threads is not None else \
        int(os.environ.get("RIESZ_THREADS", "0") or 0)
    if n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, 0 on --help/--version
        return int(exc.code or 0)
    try:
        cfg = RunConfig(
            command=ns.command, shape=ns.shape,
            z_values=tuple(ns.z), z_grid=ns.z_grid,
            eps_schedule=ns.eps_schedule, tol=ns.tol, out=ns.out,
            fmt=ns.fmt, map_spec=ns.map_spec, where=ns.where,
            t_grid=ns.t_grid, threads=ns.threads,
            checks=tuple(ns.checks))
    except ValueError as exc:
        print(f"rieszreg: invalid config: {exc}", file=sys.stderr)
        return 2
    _apply_threads(cfg.threads)
    try:
        return COMMANDS[cfg.command](cfg)
    except (ValueError, InvalidParams, UnknownShape) as exc:
        print(f"rieszreg: invalid config: {exc}", file=sys.stderr)
        return 2
    except RieszError as exc:
        print(f"rieszreg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
