"""Command-line front end: ``chiralwqed <subcommand> [flags] --output FILE``.

Every run writes one ResultTable (CSV or JSON) whose metadata echoes the full
resolved configuration, so ``chiralwqed --config previous_output.csv`` rebuilds
the same table. ``CHIRALWQED_OUTPUT_DIR`` redirects relative output and plot
paths into a directory.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import FitError, band_metrics, fit_power_law
from .chain import (DEFAULT_POLE_TOL, build_chain_hamiltonian, edge_eigenvectors,
                    markov_bands_1d, triangular_block_spectrum)
from .exact import RESIDUAL_TOL, compare_dispersions, exact_bands_1d
from .lattice import DETUNING_CONVENTIONS, bands_2d, build_lattice_hamiltonian
from .model import ChainSpec, ChiralWQEDError, LatticeSpec, Polarization1D, Polarization2D, parse_phase
from .plotting import render_plot
from .spectral import (BASIS_DEPENDENCE_TOL, RESIDUAL_RTOL, classify_decay,
                       darkest_state, decay_rates, eigendecompose, photonic_distribution, size_sweep)
from .tables import Column, ResultTable, infer_format, read_table, render_table, write_table

OUTPUT_DIR_ENV = "CHIRALWQED_OUTPUT_DIR"
PROG = "chiralwqed"
# keys of the resolved namespace that are not part of the echoed configuration
_PRIVATE = {"config", "handler", "plot_kind"}


class CLIError(Exception):
    pass


# ---------------------------------------------------------------- parsing

def _positive_int(text):
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _finite(text):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return v


def _phase(text):
    try:
        parse_phase(str(text))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid phase {text!r}; use pi/2, pi, 2pi or a decimal number")
    return str(text)


def _n_list(text):
    if isinstance(text, list):
        return [_positive_int(v) for v in text]
    try:
        return [_positive_int(v) for v in str(text).split(",") if v.strip()]
    except argparse.ArgumentTypeError as err:
        raise argparse.ArgumentTypeError(f"--n-list: {err}")


def _io_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--output", "-o", help="output table path ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="table format (default: from suffix)")
    p.add_argument("--plot", help="optional SVG plot path")
    p.add_argument("--config", help="JSON config (or a previous output table); flags override it")
    return p


def _common_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--qd", type=_phase, default="pi", help="phase between sites: pi/2, pi, 2pi or decimal")
    p.add_argument("--gamma0", type=_finite, default=1.0, help="single-qubit decay rate (energy unit)")
    return p


def _chain_args(p):
    p.add_argument("--delta", type=_finite, default=0.0, help="level splitting in units of gamma0")


def _lattice_args(p):
    p.add_argument("--delta-x", type=_finite, default=0.0)
    p.add_argument("--delta-y", type=_finite, default=0.0)
    p.add_argument("--convention", choices=DETUNING_CONVENTIONS, default="rotated",
                   help="sign convention of the X-orbital detuning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    parents = [_io_parent(), _common_parent()]

    def add(name, handler, plot_kind, help_text):
        p = sub.add_parser(name, parents=parents, help=help_text)
        p.set_defaults(handler=handler, plot_kind=plot_kind)
        return p

    for name, handler, help_text in (
        ("bands1d", cmd_bands1d, "Markovian chain bands on a k grid"),
        ("bands1d-exact", cmd_bands1d_exact, "exact chain bands from the transfer matrix"),
        ("compare", cmd_compare, "Markovian against exact chain bands"),
    ):
        p = add(name, handler, "bands", help_text)
        _chain_args(p)
        p.add_argument("--k-points", type=_positive_int, default=201)
        if name == "bands1d":
            p.add_argument("--pole-tol", type=_finite, default=DEFAULT_POLE_TOL)

    p = add("spectrum1d", cmd_spectrum, "spectrum", "complex spectrum of a finite chain")
    _chain_args(p)
    p.add_argument("--n-sites", type=_positive_int, default=10)
    p.set_defaults(model="1d")

    p = add("spectrum2d", cmd_spectrum, "spectrum", "complex spectrum of a finite square lattice")
    _lattice_args(p)
    p.add_argument("--n-sites", type=_positive_int, default=4)
    p.set_defaults(model="2d")

    p = add("bands2d", cmd_bands2d, "cuts", "lattice Bloch bands on a square k grid")
    _lattice_args(p)
    p.add_argument("--variant", choices=("linear", "full"), default="linear")
    p.add_argument("--grid", type=_positive_int, default=101, help="points per k axis")
    p.add_argument("--k-max", type=_finite, default=0.5, help="grid spans [-k_max, k_max] in each axis")
    p.add_argument("--pole-tol", type=_finite, default=DEFAULT_POLE_TOL)

    for name, handler, kind, help_text in (
        ("scaling", cmd_scaling, "scaling", "darkest decay rate against system size with a power-law fit"),
        ("distribution", cmd_distribution, "distribution", "photonic weight of the darkest state(s)"),
    ):
        p = add(name, handler, kind, help_text)
        p.add_argument("--model", choices=("1d", "2d"), default="1d")
        _chain_args(p)
        _lattice_args(p)
        if name == "scaling":
            p.add_argument("--n-min", type=_positive_int, default=10)
            p.add_argument("--n-max", type=_positive_int, default=100)
            p.add_argument("--n-step", type=_positive_int, default=10)
            p.add_argument("--n-list", type=_n_list, help="comma-separated sizes (overrides n-min/max/step)")
            p.add_argument("--workers", type=_positive_int, default=None)
        else:
            p.add_argument("--n-sites", type=_positive_int, default=10)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise CLIError(f"cannot read config {path}: {err.strerror or err}")
    try:
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
            if "metadata" in doc and "rows" in doc:
                doc = doc["metadata"].get("config", {})
        else:
            doc = read_table(path).metadata.get("config", {})
    except (ValueError, KeyError) as err:
        raise CLIError(f"config {path} is neither a JSON object nor a result table: {err}")
    if not isinstance(doc, dict):
        raise CLIError(f"config {path} must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _config_argv(sub: argparse.ArgumentParser, cfg: dict) -> list:
    """Turn config entries into flags so they pass the same validators as the command line."""
    flags = {a.dest: a for a in sub._actions if a.option_strings}
    out = []
    for key in sorted(cfg):
        if key in ("subcommand", "config") or (key in sub._defaults and key not in flags):
            continue
        if key not in flags:
            raise CLIError(f"unknown config key {key!r} for {sub.prog.split()[-1]}; "
                           f"allowed: {sorted(k for k in flags if k not in ('help', 'config'))}")
        value = cfg[key]
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        out += [flags[key].option_strings[-1], str(value)]
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    cfg_path, cfg = None, {}
    if "--config" in argv:
        j = argv.index("--config")
        if j + 1 >= len(argv):
            parser.error("--config needs a path")
        cfg_path = argv[j + 1]
        cfg = _load_config(cfg_path)
    elif any(a.startswith("--config=") for a in argv):
        cfg_path = next(a for a in argv if a.startswith("--config="))[len("--config="):]
        cfg = _load_config(cfg_path)
    positional = [a for a in argv if not a.startswith("-")]
    name = next((a for a in positional if _subparser(parser, a) is not None), None)
    if name is None and cfg.get("subcommand"):
        name = cfg["subcommand"]
        if _subparser(parser, name) is None:
            raise CLIError(f"unknown subcommand {name!r} in config {cfg_path}")
        argv = [name] + argv
    if name is None:
        if not argv or all(a.startswith("-") for a in argv):
            parser.error("a subcommand is required")
        parser.parse_args(argv)  # reports the unknown subcommand
    if cfg.get("subcommand") not in (None, name):
        raise CLIError(f"config {cfg_path} is for subcommand {cfg['subcommand']!r}, not {name!r}")
    sub = _subparser(parser, name)
    at = argv.index(name)
    # config flags first, so explicit flags given later win
    args = parser.parse_args(argv[: at + 1] + _config_argv(sub, cfg) + argv[at + 1:])
    args.config = cfg_path
    return args


# ---------------------------------------------------------------- helpers

def _resolve(path):
    if path in (None, "-"):
        return path
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _PRIVATE}


def _base_metadata(args) -> dict:
    return {
        "subcommand": args.subcommand,
        "config": _config_echo(args),
        "version": __version__,
        "energy_unit": "gamma0",
        "energy_convention": "shift eps - omega of the single-excitation energy",
        "thresholds": {},
        "excluded": [],
    }


def _chain_spec(args, n_sites=1) -> ChainSpec:
    return ChainSpec(n_sites, parse_phase(args.qd), args.delta, args.gamma0)


def _lattice_spec(args, n_sites=1) -> LatticeSpec:
    return LatticeSpec(n_sites, parse_phase(args.qd), args.delta_x, args.delta_y, args.gamma0)


def _k_points(args):
    if args.k_points < 2:
        raise CLIError(f"--k-points must be >= 2, got {args.k_points}")
    return args.k_points


def _warn(msg: str) -> None:
    print(f"{PROG}: warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- subcommands

def cmd_bands1d(args):
    spec = _chain_spec(args)
    if not args.pole_tol > 0:
        raise CLIError("--pole-tol must be > 0")
    bands = markov_bands_1d(spec, _k_points(args), args.pole_tol)
    rows = [(float(kd), b, float(bands.bands[b, j])) for j, kd in enumerate(bands.k)
            for b in range(bands.bands.shape[0])]
    meta = _base_metadata(args)
    meta["thresholds"] = {"pole_tol": args.pole_tol}
    meta["excluded"] = [{"k": k, "reason": why} for k, why in bands.excluded]
    cols = [Column("kd", "1/d", "float"), Column("band_index", "", "int"),
            Column("energy_re", "gamma0", "float")]
    return ResultTable(cols, rows, meta)


def cmd_bands1d_exact(args):
    spec = _chain_spec(args)
    meta = _base_metadata(args)
    rows, gaps = [], []
    for pt in exact_bands_1d(spec, _k_points(args)):
        if not pt.roots:
            gaps.append(pt.kd)
        for j, (x, res) in enumerate(zip(pt.roots, pt.residuals)):
            rows.append((pt.kd, j, x, -x, res))
    meta["thresholds"] = {"residual_tol": RESIDUAL_TOL}
    meta["k_without_real_roots"] = gaps
    cols = [Column("kd", "1/d", "float"), Column("band_index", "", "int"),
            Column("x", "gamma0", "float"), Column("energy_re", "gamma0", "float"),
            Column("residual", "", "float")]
    return ResultTable(cols, rows, meta)


def cmd_compare(args):
    spec = _chain_spec(args)
    cmp = compare_dispersions(spec, _k_points(args))
    rows = [(float(kd), b, float(cmp.reference[b, j]), float(cmp.other[b, j]),
             float(cmp.deviations[b, j]))
            for j, kd in enumerate(cmp.k) for b in range(cmp.reference.shape[0])]
    meta = _base_metadata(args)
    meta["max_deviation"] = cmp.max_deviation
    meta["mean_deviation"] = cmp.mean_deviation
    meta["flags"] = [{"k": k, "reason": why} for k, why in cmp.flags]
    meta["excluded"] = [{"k": k, "reason": why} for k, why in cmp.flags if why == "Markov pole"]
    cols = [Column("kd", "1/d", "float"), Column("band_index", "", "int"),
            Column("markov_energy", "gamma0", "float"), Column("exact_energy", "gamma0", "float"),
            Column("abs_deviation", "gamma0", "float")]
    return ResultTable(cols, rows, meta)


def _spectrum_hamiltonian(args, n):
    if args.model == "1d":
        return build_chain_hamiltonian(_chain_spec(args, n))
    return build_lattice_hamiltonian(_lattice_spec(args, n), args.convention)


def cmd_spectrum(args):
    h = _spectrum_hamiltonian(args, args.n_sites)
    spec = eigendecompose(h)
    cls = classify_decay(spec, args.n_sites, args.gamma0)
    gammas, order = decay_rates(spec)
    rows = [(int(i), complex(spec.eigenvalues[i]), float(g), cls.classes[i], float(spec.residuals[i]))
            for g, i in zip(gammas, order)]
    meta = _base_metadata(args)
    meta["thresholds"] = {**cls.thresholds(), "residual_rtol": RESIDUAL_RTOL,
                          "basis_dependence_tol": BASIS_DEPENDENCE_TOL}
    meta["class_counts"] = cls.counts()
    meta["defective_warning"] = spec.defective_warning
    meta["defective_reason"] = spec.reason
    meta["basis_sigma_min"] = spec.basis_sigma_min
    meta["spectral_norm"] = spec.norm
    if spec.defective_warning:
        _warn(f"defective spectrum: {spec.reason}")
        diag = triangular_block_spectrum(h) if args.model == "1d" else None
        if diag is not None:
            vals, counts = np.unique(np.round(diag, 15), return_counts=True)
            meta["structural_eigenvalues"] = [{"re": float(v.real), "im": float(v.imag),
                                               "multiplicity": int(c)} for v, c in zip(vals, counts)]
    else:
        eps, _ = darkest_state(spec)
        meta["darkest_energy"] = {"re": eps.real, "im": eps.imag}
    cols = [Column("index", "", "int"), Column("energy", "gamma0", "complex"),
            Column("gamma", "gamma0", "float"), Column("class", "", "str"),
            Column("residual", "gamma0", "float")]
    return ResultTable(cols, rows, meta)


def cmd_bands2d(args):
    spec = _lattice_spec(args)
    if not args.k_max > 0:
        raise CLIError("--k-max must be > 0")
    ks = np.linspace(-args.k_max, args.k_max, args.grid)
    bands = bands_2d(spec, ks, variant=args.variant, convention=args.convention, tol=args.pole_tol)
    rows = []
    for a, kx in enumerate(bands.kx):
        for b, ky in enumerate(bands.ky):
            for j in range(3):
                rows.append(("grid", float(kx), float(ky), j, float(bands.surfaces[a, b, j])))
    for b, ky in enumerate(bands.ky):
        for j in range(3):
            rows.append(("kx=0", 0.0, float(ky), j, float(bands.cut_kx0[b, j])))
    for a, kx in enumerate(bands.kx):
        for j in range(3):
            rows.append(("ky=0", float(kx), 0.0, j, float(bands.cut_ky0[a, j])))
    meta = _base_metadata(args)
    meta["thresholds"] = {"pole_tol": args.pole_tol}
    meta["excluded"] = [{"kx": k[0], "ky": k[1], "reason": why} for k, why in bands.excluded]
    pts = bands.points()
    if pts.size:
        metrics = band_metrics(pts)
        meta["band_metrics"] = metrics.as_dict()
        meta["middle_band_max_abs"] = float(np.max(np.abs(pts[:, 1])))
    cols = [Column("cut", "", "str"), Column("kx", "1/d", "float"), Column("ky", "1/d", "float"),
            Column("band_index", "", "int"), Column("energy_re", "gamma0", "float")]
    return ResultTable(cols, rows, meta)


def _size_list(args):
    if args.n_list:
        ns = sorted(set(args.n_list))
    else:
        if args.n_min > args.n_max:
            raise CLIError(f"--n-min ({args.n_min}) exceeds --n-max ({args.n_max})")
        ns = list(range(args.n_min, args.n_max + 1, args.n_step))
    if not ns:
        raise CLIError("no system sizes selected")
    return ns


def cmd_scaling(args):
    ns = _size_list(args)
    template = _chain_spec(args, ns[0]) if args.model == "1d" else _lattice_spec(args, ns[0])
    sweep = size_sweep(template, ns, workers=args.workers, convention=args.convention)
    rows = [(r.n_sites, r.gamma_min, r.darkest_energy) for r in sweep]
    meta = _base_metadata(args)
    meta["n_list"] = ns
    try:
        meta["fit"] = fit_power_law((r.n_sites, r.gamma_min) for r in sweep).as_dict()
    except FitError as err:
        meta["fit"] = {"error": str(err)}
        _warn(f"power-law fit failed: {err}")
    cols = [Column("n_sites", "", "int"), Column("gamma_min", "gamma0", "float"),
            Column("darkest_energy", "gamma0", "complex")]
    return ResultTable(cols, rows, meta)


def cmd_distribution(args):
    n = args.n_sites
    h = _spectrum_hamiltonian(args, n)
    meta = _base_metadata(args)
    states = []
    if args.model == "1d" and args.delta == 0.0:
        # decoupled chain: exact edge states instead of a defective numerical basis
        for pol, vec in edge_eigenvectors(h).items():
            states.append((f"edge_{pol.name}", vec))
        meta["method"] = "forward substitution (delta = 0 chain is defective)"
        meta["state_energy"] = {"re": 0.0, "im": -args.gamma0 / 4.0}
    else:
        spec = eigendecompose(h)
        eps, vec = darkest_state(spec)
        g = spec.gammas
        states.append(("darkest", vec))
        meta["method"] = "numerical diagonalization"
        meta["state_energy"] = {"re": eps.real, "im": eps.imag}
        meta["darkest_degeneracy"] = int(np.sum(np.abs(g - g.min()) <= 1e-9 * args.gamma0))
        if meta["darkest_degeneracy"] > 1:
            _warn(f"darkest decay rate is {meta['darkest_degeneracy']}-fold degenerate; "
                  "the listed state is one member of that subspace")
    rows = []
    for label, vec in states:
        dist = photonic_distribution(vec, h.layout)
        p = dist.probabilities
        if args.model == "1d":
            for s in range(n):
                for pol in Polarization1D:
                    rows.append((label, s, pol.name, float(p[s, pol])))
        else:
            for ix in range(n):
                for iy in range(n):
                    for pol in Polarization2D:
                        rows.append((label, ix, iy, pol.name, float(p[ix * n + iy, pol])))
    if args.model == "1d":
        cols = [Column("state", "", "str"), Column("site", "", "int"), Column("pol", "", "str"),
                Column("probability", "", "float")]
    else:
        cols = [Column("state", "", "str"), Column("ix", "", "int"), Column("iy", "", "int"),
                Column("pol", "", "str"), Column("probability", "", "float")]
    return ResultTable(cols, rows, meta)


def _plot_table(args, table: ResultTable) -> ResultTable:
    """Adapt tables whose schema differs from their plot kind."""
    if args.subcommand == "compare":
        rows = []
        for kd, b, m, e, _ in table.rows:
            rows.append((kd, b, m))
            rows.append((kd, b + 2, e))
        return ResultTable([Column("kd"), Column("band_index", kind="int"), Column("energy_re")],
                           rows, table.metadata)
    if args.subcommand == "distribution" and len({r[0] for r in table.rows}) > 1:
        # one figure per state would need several files; plot the first state
        first = table.rows[0][0]
        return ResultTable(table.columns[1:], [r[1:] for r in table.rows if r[0] == first],
                           table.metadata)
    if args.subcommand == "distribution":
        return ResultTable(table.columns[1:], [r[1:] for r in table.rows], table.metadata)
    return table


# ---------------------------------------------------------------- entry points

def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except CLIError as err:
        print(f"{PROG}: error: {err}", file=sys.stderr)
        return 2
    try:
        if not args.output:
            raise CLIError("--output is required (use '-' for stdout)")
        out = _resolve(args.output)
        plot = _resolve(args.plot)
        cfg = Path(args.config).resolve() if args.config else None
        for target in (out, plot):
            if cfg is not None and target not in (None, "-") and Path(target).resolve() == cfg:
                raise CLIError(f"refusing to overwrite the config input {args.config}")
        table = args.handler(args)
        if out == "-":
            fmt = args.format or "csv"
            sys.stdout.write(render_table(table, fmt))
        else:
            write_table(table, out, infer_format(out, args.format))
        if plot is not None:
            render_plot(_plot_table(args, table), args.plot_kind, plot)
    except (CLIError, ChiralWQEDError, FitError, ValueError, OSError) as err:
        print(f"{PROG}: error: {err}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
