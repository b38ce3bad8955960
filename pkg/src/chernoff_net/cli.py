"""Command-line front end.

Subcommands: ``run`` (one Monte Carlo block), ``sweep`` (one axis), ``bounds``
(evaluate the theoretical bounds) and ``validate-graph`` (weight-matrix and
sufficient-condition report for an edge list).

Exit codes: 0 success, 2 configuration error, 3 runtime error (step cap).
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .cct import EVENT_FIELDS
from .errors import ChernoffNetError, ConfigurationError, StepCapExceeded
from .harness import (ExperimentConfig, generate_bernoulli_model, generate_topology, run_monte_carlo, stats_to_csv,
                      sweep, theoretical_bounds)
from .maximin import PolicyCache
from .network import (check_cct_conditions, diameter, ergodic_coefficient, metropolis_weights, radius,
                      read_edge_list, validate_weights)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


class ConfigError(ConfigurationError):
    pass


# -- config parsing ---------------------------------------------------------

def _parse_omega(text: str) -> tuple:
    return tuple(float(w) for w in text.split(","))


def _parse_hypothesis(text: str):
    return text if text == "uniform" else int(text)


_CONVERTERS = {
    "protocol": str, "M": int, "L": int, "c": float, "omega": _parse_omega, "trials": int, "seed": int,
    "topology": str, "model": str, "true_hypothesis": _parse_hypothesis, "slack": float,
}


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key in CONFIG_KEYS:
        val = getattr(cfg, key)
        if val is None:
            continue
        if key == "omega":
            val = ",".join(repr(w) for w in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def resolve_config(args) -> ExperimentConfig:
    """File values first, then flags on top."""
    values = read_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "seed" not in values:
        raise ConfigError("a master seed is required (--seed or 'seed = ...' in the config file)")
    return ExperimentConfig(**values)


# -- output -----------------------------------------------------------------

def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(text: str, out) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _jobs(args) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("CHERNOFF_NET_JOBS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CHERNOFF_NET_JOBS must be an integer, got {env!r}") from None
    return 1


def _events_csv(records) -> str:
    import csv
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("trial",) + EVENT_FIELDS)
    for t, rec in enumerate(records):
        for ev in rec.extra.get("events", ()):
            w.writerow((t,) + tuple(ev))
    return buf.getvalue()


# -- subcommands ------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return EXIT_OK
    if args.log_events and cfg.protocol != "cct":
        raise ConfigError("--log-events is only available for the cct protocol")
    if args.log_events and not args.out:
        raise ConfigError("--log-events needs --out")
    stats = run_monte_carlo(cfg, jobs=_jobs(args), log_events=args.log_events)
    text = stats_to_csv([stats])
    if args.log_events:
        atomic_write(f"{args.out}.events.csv", _events_csv(stats.records))
    _emit(text, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return EXIT_OK
    try:
        values = [float(v) for v in args.values.split(",")]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    rows = sweep(cfg, args.axis, values, jobs=_jobs(args))
    for row in rows:
        if row.error:
            print(f"cell {args.axis}={row.value}: {row.error}", file=sys.stderr)
    _emit(stats_to_csv(rows), args.out)
    return EXIT_RUNTIME if all(r.error for r in rows) else EXIT_OK


def cmd_bounds(args) -> int:
    I = np.array(_parse_omega(args.I))
    if np.any(I <= 0):
        raise ConfigError("capabilities must be positive")
    kw = {}
    if args.protocol == "cct":
        if args.topology is None:
            raise ConfigError("cct bounds need --topology file:<path> or generated (with --L and --seed)")
        g = _load_graph(args)
        W = metropolis_weights(g)
        h = radius(g) if g.L > 1 else 1
        kw = dict(L=g.L, h=h, d=max(diameter(g), 1), eta_h=ergodic_coefficient(np.linalg.matrix_power(W, h)))
    rep = theoretical_bounds(args.protocol, args.M, args.c, I, args.hypothesis, slack=args.slack or 1.0, **kw)
    print(f"bound_err = {rep.err:.5g}")
    print(f"bound_EN = {rep.EN:.5g}")
    print(f"bound_EN_converse = {rep.EN_converse:.5g}")
    print(f"bound_EN2 = {rep.EN_r(2):.5g}")
    print(f"bound_risk = {rep.risk:.5g}")
    if rep.Nc is not None:
        print(f"bound_Nc = {rep.Nc:.5g}")
    return EXIT_OK


def _load_graph(args):
    if args.topology.startswith("file:"):
        return read_edge_list(args.topology[5:])
    if args.topology == "generated":
        if args.L is None or args.seed is None:
            raise ConfigError("a generated topology needs --L and --seed")
        return generate_topology(args.L, args.seed)
    raise ConfigError(f"topology must be 'generated' or 'file:<path>', got {args.topology!r}")


def cmd_validate_graph(args) -> int:
    if args.path:
        args.topology = f"file:{args.path}"
    elif args.topology is None:
        raise ConfigError("give an edge-list path or --topology")
    g = _load_graph(args)
    if not g.is_connected():
        raise ConfigError("graph is not connected")
    W = metropolis_weights(g)
    d, h = diameter(g), radius(g)
    rep = validate_weights(W, g)
    print(f"L = {g.L}")
    print(f"edges = {len(g.edges)}")
    print(f"d_G = {d}")
    print(f"h_G = {h}")
    eta = ergodic_coefficient(W)
    eta_h = ergodic_coefficient(np.linalg.matrix_power(W, max(h, 1)))
    print(f"eta_W = {eta:.6g}")
    print(f"eta_W_h = {eta_h:.6g}")
    print(f"weights_ok = {rep.ok} (row={rep.row_ok}, col={rep.col_ok}, support={rep.support_ok}, "
          f"spectral_radius={rep.spectral_radius:.6g})")
    if g.L == 1:
        return EXIT_OK
    if args.I:
        I = np.array(_parse_omega(args.I))
    else:
        I = PolicyCache(generate_bernoulli_model(args.M, g.L, args.seed or 0)).v.sum(axis=0)
    cond = check_cct_conditions(I, W, max(h, 1))
    print(f"lemma1 = {cond.lemma1}")
    print(f"corollary_lhs = {' '.join(f'{x:.6g}' for x in cond.lhs)}")
    for name, r, ok in zip(("i", "ii", "iii"), cond.rhs, cond.holds):
        print(f"condition_{name} = {ok} (rhs={r:.6g})")
    return EXIT_OK


# -- argument parser --------------------------------------------------------

def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file with ExperimentConfig fields")
    p.add_argument("--protocol", choices=("standard", "fct", "dct", "cct"))
    p.add_argument("--M", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--omega", type=_parse_omega, help="comma-separated error costs, one per hypothesis")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--topology", help="generated | file:<path>")
    p.add_argument("--model", help="bernoulli | file:<path>")
    p.add_argument("--true-hypothesis", dest="true_hypothesis", type=_parse_hypothesis,
                   help="hypothesis index or 'uniform'")
    p.add_argument("--slack", type=float)
    p.add_argument("--out", help="output CSV path (stdout if omitted)")
    p.add_argument("--jobs", type=int, help="worker processes (default: $CHERNOFF_NET_JOBS or 1)")
    p.add_argument("--print-config", action="store_true", help="echo the resolved config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chernoff-net", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one Monte Carlo block")
    _experiment_flags(p)
    p.add_argument("--log-events", action="store_true", help="write per-round cct events to <out>.events.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="Monte Carlo blocks along one axis")
    _experiment_flags(p)
    p.add_argument("--axis", choices=("c", "L"), required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate the theoretical bounds")
    p.add_argument("--protocol", choices=("standard", "fct", "dct", "cct"), default="dct")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--I", required=True, help="cumulative capability I(i), or a comma list over hypotheses")
    p.add_argument("--hypothesis", type=int, help="true hypothesis (worst case over the list if omitted)")
    p.add_argument("--slack", type=float)
    p.add_argument("--topology")
    p.add_argument("--L", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("validate-graph", help="check an edge list and report consensus constants")
    p.add_argument("path", nargs="?", help="edge-list file")
    p.add_argument("--topology", help="generated | file:<path> (alternative to PATH)")
    p.add_argument("--L", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--M", type=int, default=3)
    p.add_argument("--I", help="capabilities for the sufficient-condition report (default: generated model)")
    p.set_defaults(func=cmd_validate_graph)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "c", None) is not None and args.command == "bounds" and not 0 < args.c < 1:
            raise ConfigError("c must lie in (0, 1)")
        return args.func(args)
    except StepCapExceeded as exc:
        print(f"error: {exc} (replay seed {exc.seed})", file=sys.stderr)
        return EXIT_RUNTIME
    except (ChernoffNetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
