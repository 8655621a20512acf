"""Command line entry point.

Every subcommand accepts ``--config FILE`` (``key = value`` lines whose keys
are the option names with underscores), ``--seed`` and ``--out DIR``.
Explicit flags override the config file.  Each run writes its CSV outputs
and a ``manifest.json`` into ``--out``.

Exit codes: 0 success, 2 invalid input, 3 numerical check not passed or
not converged.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import subprocess
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List

import numpy as np

from . import __version__
from .config import ConfigError, parse_bool, read_config
from .errors import BlowUpError, ConstraintViolation, PreconditionError

MANIFEST_SCHEMA = "1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

log = logging.getLogger("fkp")


@dataclass
class RunManifest:
    command: str
    config_path: str
    seed: int
    git_describe: str
    started: str
    finished: str = ""
    outputs: List[dict] = field(default_factory=list)
    schema: str = MANIFEST_SCHEMA

    def add_output(self, path):
        self.outputs.append({"path": str(path), "sha256": sha256_file(path)})

    def write(self, path):
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    out = res.stdout.strip()
    return out if res.returncode == 0 and out else "unknown"


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _floats(text):
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _write_csv(path, header, rows):
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.17g}"
    return str(v)


# ---------------------------------------------------------------- commands


def _make_symbol(args):
    from .symbols import ILW, PURE_POWER, WHITHAM_ST, KPSymbol, SymbolFamily

    kind = {"power": PURE_POWER, "ilw": ILW, "whitham": WHITHAM_ST}[args.symbol]
    fam = SymbolFamily(kind, alpha=args.alpha, delta_ilw=args.delta, b_whitham=args.b)
    return KPSymbol(fam, args.kappa)


def cmd_evolve(args, manifest, out: Path):
    from .evolution import SolverConfig, gaussian_dx, kdv_soliton, run
    from .snapshot import read_field, write_field
    from .spectral import make_grid

    if args.init.startswith("file:"):
        u0 = read_field(args.init[5:])
    else:
        grid = make_grid(args.nx, args.ny, args.lx, args.ly)
        if args.init == "soliton":
            u0 = kdv_soliton(grid, c=args.amplitude)
        elif args.init == "gaussian":
            u0 = gaussian_dx(grid, amplitude=args.amplitude, width=args.width)
        else:
            raise PreconditionError(f"unknown init {args.init!r}")
    cfg = SolverConfig(_make_symbol(args), args.dt, args.t_end, snapshot_every=args.snapshot_every,
                       dealias=args.dealias, diagnostics_every=args.diagnostics_every,
                       xs_order=args.xs_order, linear_only=args.linear_only)
    code = EXIT_OK
    try:
        snaps, diags = run(u0, cfg)
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        snaps, diags = exc.snapshots, exc.diagnostics
        code = EXIT_NUMERIC
    for i, (t, u) in enumerate(snaps):
        p = out / f"snapshot_{i:05d}.fkp"
        write_field(p, u)
        manifest.add_output(p)
    if diags is not None and diags.times:
        p = out / "diagnostics.csv"
        diags.to_csv(p)
        manifest.add_output(p)
        l2 = diags.relative_drift("l2")
        line = f"t_final={diags.times[-1]:.6g} l2_drift={l2:.3e}"
        if not args.linear_only and not math.isnan(diags.hamiltonian[0]):
            line += f" hamiltonian_drift={diags.relative_drift('hamiltonian'):.3e}"
        print(line)
    return code


def cmd_resonance(args, manifest, out: Path):
    from .resonance import (build_test_data, growth_exponent_fit, picard_second_norm,
                            predicted_exponent, resonance_bounds_check)

    Ns = args.N_list
    if len(Ns) < 3:
        raise PreconditionError("--N-list needs at least three values")
    rows, results = [], []
    for N in Ns:
        data = build_test_data(args.variant, args.alpha, N, args.theta, args.s1, args.s2)
        res = picard_second_norm(data, args.t)
        results.append(res)
        running = float("nan")
        if len(results) >= 2:
            running = float(np.polyfit(np.log([r.N for r in results]), np.log([r.ratio for r in results]), 1)[0])
        rows.append((N, res.ratio, res.omega_max, running))
    p = out / "resonance.csv"
    _write_csv(p, ["N", "ratio", "omega_max", "exponent_running"], rows)
    manifest.add_output(p)
    rep = resonance_bounds_check(build_test_data(args.variant, args.alpha, Ns[-1], args.theta, args.s1, args.s2),
                                 n_samples=args.samples, seed=args.seed)
    print(f"bounds N={Ns[-1]:g} gamma1_ratio={rep.gamma1_ratio[0]:.4g}..{rep.gamma1_ratio[1]:.4g} "
          f"omega_max={rep.omega_max:.4g}")
    slope, r2 = growth_exponent_fit(results)
    print(f"exponent={slope:.6g} r2={r2:.6g} predicted={predicted_exponent(args.variant, args.alpha):.6g}")
    return EXIT_OK if all(r.converged for r in results) else EXIT_NUMERIC


def cmd_constraint(args, manifest, out: Path):
    from .constraint import GaussianDatum, default_spec, generalized_x_mass
    from .symbols import pure_power

    datum = GaussianDatum(args.amplitude, args.sigma)
    q = default_spec(args.sigma, xi_min_exclusion=args.exclusion)
    if args.X_steps < 1 or not args.X_max > 0:
        raise PreconditionError("need X_max > 0 and X_steps >= 1")
    X = np.linspace(args.X_max / args.X_steps, args.X_max, args.X_steps)
    sym = pure_power(args.alpha, args.kappa)
    table = generalized_x_mass(datum, sym, args.y, args.t, X, q)
    p = out / "constraint.csv"
    _write_csv(p, ["X", "mass_real", "mass_imag_residual", "flag"], table.rows())
    manifest.add_output(p)
    m0 = float(datum.x_mass(args.y))
    print(f"M(X_max)={table.mass[-1]:.6g} M0={m0:.6g} ratio={abs(table.mass[-1]) / abs(m0):.4g} "
          f"refinement_change={table.change:.3g} flag={int(table.flagged)}")
    return EXIT_NUMERIC if table.flagged else EXIT_OK


def cmd_ineq_gn(args, manifest, out: Path):
    from .evolution import gaussian_dx
    from .inequalities import gn_dilation_scan
    from .spectral import make_grid

    f = gaussian_dx(make_grid(args.n, args.n, args.length, args.length))
    rows = gn_dilation_scan(f, args.alpha)
    p = out / "gn.csv"
    _write_csv(p, ["a", "b", "ratio"], rows)
    manifest.add_output(p)
    ratios = [r[2] for r in rows]
    print(f"gn_ratio_min={min(ratios):.6g} gn_ratio_max={max(ratios):.6g}")
    return EXIT_OK


def cmd_ineq_decay(args, manifest, out: Path):
    from .inequalities import decay_scan

    lams = np.linspace(args.lambda_min, args.lambda_max, args.lambda_steps)
    sc = decay_scan(args.alpha, lams, args.R)
    p = out / "decay.csv"
    _write_csv(p, ["lambda", "reJ", "imJ", "absJ", "R", "flag"], sc.rows())
    manifest.add_output(p)
    print(f"sup_J={sc.sup:.6g} R={sc.R:.6g} R_change={sc.r_change:.3g} edge_flag={int(sc.edge_flag)}")
    bad = sc.flagged or sc.edge_flag or sc.r_change >= 0.05
    return EXIT_NUMERIC if bad else EXIT_OK


def cmd_ineq_embed(args, manifest, out: Path):
    from .inequalities import embedding_ensemble

    ratios, bound = embedding_ensemble(args.s, args.draws, args.seed, max_mode=args.max_mode)
    p = out / "embed.csv"
    _write_csv(p, ["draw", "ratio"], list(enumerate(ratios)))
    manifest.add_output(p)
    print(f"max_ratio={ratios.max():.6g} bound={bound:.6g}")
    return EXIT_OK if ratios.max() <= bound else EXIT_NUMERIC


def cmd_ineq_critical(args, manifest, out: Path):
    from .inequalities import critical_exponents

    ce = critical_exponents(args.alpha)
    print(ce.summary())
    print(f"l2_scaling_exponent={ce.l2_scaling_exponent:.5g}")
    return EXIT_OK


def cmd_validate_symbol(args, manifest, out: Path):
    from .symbols import ILW, PURE_POWER, WHITHAM_ST, SymbolFamily, validate_hypotheses

    if args.symbol == "table":
        if not args.table:
            raise PreconditionError("--table is required for a tabulated symbol")
        fam = SymbolFamily.from_csv(args.table, alpha=args.alpha)
    else:
        kind = {"power": PURE_POWER, "ilw": ILW, "whitham": WHITHAM_ST}[args.symbol]
        fam = SymbolFamily(kind, alpha=args.alpha, delta_ilw=args.delta, b_whitham=args.b)
    if not 0 < args.band_lo <= args.band_hi:
        raise PreconditionError("need 0 < band-lo <= band-hi")
    rep = validate_hypotheses(fam, fam.effective_alpha, args.xi0, band=(args.band_lo, args.band_hi))
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.passed else EXIT_NUMERIC


# ---------------------------------------------------------------- parser


def _common(p):
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")


def _symbol_args(p, choices=("power", "ilw", "whitham")):
    p.add_argument("--symbol", choices=choices, default="power")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--delta", type=float, default=1.0, help="ILW depth")
    p.add_argument("--b", type=float, default=1.0, help="surface tension coefficient")


def build_parser():
    parser = argparse.ArgumentParser(prog="fkp", description="fractional KP toolkit")
    parser.add_argument("--version", action="version",
                        version=f"fkp {__version__} manifest-schema {MANIFEST_SCHEMA}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = {}

    p = sub.add_parser("evolve", help="integrate the equation on a periodic box")
    _common(p)
    _symbol_args(p)
    p.add_argument("--kappa", type=int, choices=(1, -1), default=1)
    p.add_argument("--init", default="gaussian", help="soliton, gaussian or file:<path>")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--ny", type=int, default=128)
    p.add_argument("--lx", type=float, default=20.0)
    p.add_argument("--ly", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--snapshot-every", type=int, default=100)
    p.add_argument("--diagnostics-every", type=int, default=10)
    p.add_argument("--xs-order", type=float, default=2.0)
    p.add_argument("--dealias", type=parse_bool, default=True)
    p.add_argument("--linear-only", action="store_true")
    p.set_defaults(func=cmd_evolve)
    leaves["evolve"] = p

    p = sub.add_parser("resonance-scan", help="second Picard iterate over a ladder of N")
    _common(p)
    p.add_argument("--variant", choices=("fkp2", "fkp1"), default="fkp2")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--s1", type=float, default=0.0)
    p.add_argument("--s2", type=float, default=0.0)
    p.add_argument("--N-list", type=_floats, default="100,1000,10000")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_resonance)
    leaves["resonance-scan"] = p

    p = sub.add_parser("constraint-demo", help="generalized x-mass of the free evolution")
    _common(p)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--kappa", type=int, choices=(1, -1), default=1)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--X-max", type=float, default=400.0)
    p.add_argument("--X-steps", type=int, default=16)
    p.add_argument("--exclusion", type=float, default=1e-6)
    p.set_defaults(func=cmd_constraint)
    leaves["constraint-demo"] = p

    p = sub.add_parser("ineq", help="functional inequality checks")
    isub = p.add_subparsers(dest="ineq_command", required=True)
    q = isub.add_parser("gn", help="cubic Gagliardo-Nirenberg ratio over dilations")
    _common(q)
    q.add_argument("--alpha", type=float, default=0.8)
    q.add_argument("--n", type=int, default=128)
    q.add_argument("--length", type=float, default=40.0)
    q.set_defaults(func=cmd_ineq_gn)
    leaves["ineq gn"] = q
    q = isub.add_parser("decay", help="oscillatory kernel J over a lambda grid")
    _common(q)
    q.add_argument("--alpha", type=float, default=2.0)
    q.add_argument("--lambda-min", type=float, default=-50.0)
    q.add_argument("--lambda-max", type=float, default=50.0)
    q.add_argument("--lambda-steps", type=int, default=101)
    q.add_argument("--R", type=float, default=None)
    q.set_defaults(func=cmd_ineq_decay)
    leaves["ineq decay"] = q
    q = isub.add_parser("embed", help="d_x u in L-infinity against the X^s norm")
    _common(q)
    q.add_argument("--s", type=float, default=4.5)
    q.add_argument("--draws", type=int, default=100)
    q.add_argument("--max-mode", type=int, default=16)
    q.set_defaults(func=cmd_ineq_embed)
    leaves["ineq embed"] = q
    q = isub.add_parser("critical", help="critical exponents for a dispersion strength")
    _common(q)
    q.add_argument("--alpha", type=float, default=2.0)
    q.set_defaults(func=cmd_ineq_critical)
    leaves["ineq critical"] = q

    p = sub.add_parser("validate-symbol", help="check the symbol hypotheses")
    _common(p)
    _symbol_args(p, ("power", "ilw", "whitham", "table"))
    p.add_argument("--table", default=None, help="CSV of xi,w samples")
    p.add_argument("--xi0", type=float, default=1.0)
    p.add_argument("--band-lo", type=float, default=0.3)
    p.add_argument("--band-hi", type=float, default=3.5)
    p.set_defaults(func=cmd_validate_symbol)
    leaves["validate-symbol"] = p
    return parser, leaves


_INTERNAL = {"func", "command", "ineq_command", "config", "verbose"}


def _apply_config(parser, leaves, args, argv):
    name = args.command if args.command != "ineq" else f"ineq {args.ineq_command}"
    leaf = leaves[name]
    raw = read_config(args.config)
    known = set(vars(args)) - _INTERNAL
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {name}: {', '.join(unknown)}")
    converted = {}
    for key, value in raw.items():
        current = getattr(args, key)
        converted[key] = parse_bool(value) if isinstance(current, bool) else value
    leaf.set_defaults(**converted)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            args = _apply_config(parser, leaves, args, argv)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        name = args.command if args.command != "ineq" else f"ineq {args.ineq_command}"
        manifest = RunManifest(name, str(args.config or ""), args.seed, git_describe(), _now())
        code = args.func(args, manifest, out)
    except (PreconditionError, ConfigError, ConstraintViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    manifest.finished = _now()
    manifest.write(out / "manifest.json")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
