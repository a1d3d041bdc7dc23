"""Command-line front end.

Every command prints one JSON document to stdout embedding the resolved
configuration and seed. Commands producing tables (``relief``,
``pushforward``, ``ensemble``) also write ``<command>.csv`` and
``<command>.json`` to the output directory (``--output-dir``, else
$HOPFUQ_OUTPUT_DIR, else the working directory).

Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .buffer import SearchBox, buffer_time
from .config import RunConfig, load_config_file, resolve_config
from .exceptions import DomainError, DomainExhausted, IntegrationError, QuadratureError
from .measures import (Empirical, ShiftedExponential, Uniform, moments_published_exp, moments_published_uniform,
                       moments_pushforward, parse_measure, pushforward_singular)
from .model import NormalForm
from .phase import ComplexPhase, entry_exit, exit_map, relief_grid
from .series import build_matrix, nullspace_truncated, parse_series

log = logging.getLogger("hopfuq")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("entry-exit", "buffer", "relief", "pushforward", "moments", "ensemble", "series-check", "report")


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=None)
    g = p.add_argument_group("system")
    g.add_argument("--config", help="flat JSON file of settings; flags override it")
    g.add_argument("--system", choices=("normal-form", "modified-exp", "polynomial"))
    g.add_argument("--c", type=float, help="normal form: a1(s) = c s")
    g.add_argument("--a", type=float, help="modified form: a1(s) = s exp(-a s)")
    g.add_argument("--b", type=float, help="imaginary part b1 (modified and polynomial forms)")
    g.add_argument("--coefficients", help="polynomial a1 coefficients, ascending, comma separated")
    g.add_argument("--delta", type=float, help="O(eps) perturbation strength")
    g.add_argument("--domain-min", type=float)
    g.add_argument("--domain-max", type=float)
    g.add_argument("--output-dir")
    g.add_argument("--quiet", action="store_true", default=None, help="do not print the JSON document")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="hopfuq", description="Delayed Hopf uncertainty propagation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("entry-exit", parents=[common], help="exit time for one or more entry times")
    p.add_argument("--tau0", help="entry time(s), comma separated, or lo:hi:n for a grid")
    p.add_argument("--tau-plus", type=float, help="buffer time cap")

    p = sub.add_parser("buffer", parents=[common], help="buffer points and buffer time")
    p.add_argument("--u-min", type=float)
    p.add_argument("--u-max", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--resolution", type=int)

    p = sub.add_parser("relief", parents=[common], help="relief function on a grid (CSV)")
    p.add_argument("--grid-u", help="lo,hi,n")
    p.add_argument("--grid-v", help="lo,hi,n")

    for name, text in (("pushforward", "singular-limit output mixture (CSV)"),
                       ("moments", "published moment formulas next to the pushforward oracle")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--measure", help="uniform,-b,-a | exponential,a,beta | empirical,s1,s2,...")
        p.add_argument("--tau-plus", type=float, help="buffer time; computed when omitted")
        if name == "moments":
            p.add_argument("--q", type=int, help="single moment order")
            p.add_argument("--q-max", type=int, help="orders 1..q_max when --q is absent")

    p = sub.add_parser("ensemble", parents=[common], help="Monte Carlo integration at finite eps")
    p.add_argument("--measure")
    p.add_argument("--eps", type=float)
    p.add_argument("--allow-small-eps", action="store_true", default=None)
    p.add_argument("--h", type=float, help="tube radius in units of eps")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--max-step", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--tau-plus", type=float)

    p = sub.add_parser("series-check", parents=[common], help="composition-matrix feasibility verdict")
    p.add_argument("--pi", help="series coefficients pi_0,pi_1,...")
    p.add_argument("--truncation", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("report", parents=[common], help="run the acceptance scenarios")
    p.add_argument("--skip-ensemble", action="store_true", default=None)
    return parser


def _parse_grid(text: str) -> np.ndarray:
    lo, hi, n = (v for v in text.split(","))
    n = int(n)
    if n < 1:
        raise DomainError("grid needs at least one point")
    return np.linspace(float(lo), float(hi), n)


def _parse_tau0(text: str) -> list[float]:
    if ":" in text:
        lo, hi, n = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
    return [float(v) for v in text.split(",") if v.strip()]


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _tau_plus(cfg: RunConfig, phase: ComplexPhase):
    """Configured buffer time, else the computed one, else None."""
    if cfg.tau_plus is not None:
        return cfg.tau_plus, "config"
    rep = buffer_time(phase, SearchBox(cfg.u_min, cfg.u_max, cfg.v_max), cfg.resolution)
    return rep.tau_plus, "buffer"


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir) if cfg.output_dir else Path.cwd()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_entry_exit(cfg, phase):
    results = []
    for t0 in _parse_tau0(cfg.tau0):
        res = entry_exit(phase, t0, cfg.tau_plus)
        row = {"tau0": t0, "kind": res.kind, "exit_time": _num(res.exit_time)}
        if res.kind == "Jump":
            row.update(tau_star=res.tau_star, residual=res.residual)
        results.append(row)
    doc = {"results": results}
    if len(results) == 1:
        doc["tau_star"] = results[0]["exit_time"]
    return doc


def cmd_buffer(cfg, phase):
    return buffer_time(phase, SearchBox(cfg.u_min, cfg.u_max, cfg.v_max), cfg.resolution).to_dict()


def cmd_relief(cfg, phase):
    us, vs = _parse_grid(cfg.grid_u), _parse_grid(cfg.grid_v)
    grid = relief_grid(phase, us, vs)
    lines = ["u,v,relief"]
    for i, v in enumerate(vs):
        for j, u in enumerate(us):
            lines.append(f"{float(u)!r},{float(v)!r},{float(grid[i, j])!r}")
    return {"rows": len(us) * len(vs), "grid_u": cfg.grid_u, "grid_v": cfg.grid_v}, "\n".join(lines) + "\n"


def cmd_pushforward(cfg, phase):
    mu0 = parse_measure(cfg.measure)
    tp, source = _tau_plus(cfg, phase)
    if tp is None:
        raise DomainError("no buffer time in the search box; pass --tau-plus")
    mix = pushforward_singular(mu0, phase, tp)
    rows = ["s,density"] + [",".join(r) for r in mix.csv_rows()]
    doc = {"tau_plus_source": source, "measure": mu0.params(), **mix.summary()}
    return doc, "\n".join(rows) + "\n"


def _published_applicable(phase, mu0) -> bool:
    return isinstance(phase.field, NormalForm) and isinstance(mu0, (Uniform, ShiftedExponential))


def _published_moment(mu0, tau_plus, q):
    if q == 0:
        return 1.0
    if isinstance(mu0, Uniform):
        return moments_published_uniform(mu0.a, mu0.b, tau_plus, q)
    return moments_published_exp(mu0.a, mu0.beta, tau_plus, q)


def cmd_moments(cfg, phase):
    mu0 = parse_measure(cfg.measure)
    tp, source = _tau_plus(cfg, phase)
    if tp is None:
        raise DomainError("no buffer time in the search box; pass --tau-plus")
    doc = {"tau_plus": tp, "tau_plus_source": source, "measure": mu0.params()}
    orders = [cfg.q] if cfg.q is not None else list(range(1, cfg.q_max + 1))
    push = {q: moments_pushforward(mu0, phase, tp, q) for q in orders}
    published = {q: _published_moment(mu0, tp, q) if _published_applicable(phase, mu0) else None for q in orders}
    doc["moments"] = [{"method": m, "q": q, "value": vals[q]}
                      for q in orders for m, vals in (("paper-formula", published), ("pushforward", push))]
    if cfg.q is not None:
        doc["paper"], doc["pushforward"] = published[cfg.q], push[cfg.q]
    return doc


def cmd_ensemble(cfg, phase):
    from .ensemble import IntegratorConfig, TubeSpec, empirical_stats, noise_floor, run_ensemble

    mu0 = parse_measure(cfg.measure)
    system = cfg.build_system()
    config = IntegratorConfig(cfg.eps, cfg.rtol, cfg.atol, cfg.max_step, cfg.horizon)
    tube = TubeSpec(cfg.h)
    floor = noise_floor(phase, mu0, cfg.eps, cfg.atol)
    result = run_ensemble(system, mu0, cfg.n, cfg.seed, config, tube, cfg.workers)
    tp, source = _tau_plus(cfg, phase)
    if tp is None:
        tp, source = phase.field.domain[1], "domain-end"
    reference = None if isinstance(mu0, Empirical) else pushforward_singular(mu0, phase, tp)
    stats = empirical_stats(result, reference, predictor=lambda s: exit_map(phase, s, tp))
    doc = {"tau_plus": tp, "tau_plus_source": source, "stats": stats, "counts": result.counts(),
           "noise_floor": {"depth": floor.depth, "bound": floor.bound, "ok": floor.ok}}
    return doc, result.to_csv()


def cmd_series(cfg, phase):
    pi = parse_series(cfg.pi)
    verdict = nullspace_truncated(build_matrix(pi, cfg.truncation), cfg.tol)
    return {"pi": list(pi.coeffs), "N": cfg.truncation, **verdict.to_dict()}


def cmd_report(cfg, phase):
    from .acceptance import run_all

    results = run_all(skip_ensemble=cfg.skip_ensemble)
    for r in results:
        r.details = json.loads(json.dumps(r.details, default=_num))
    return {"criteria": [r.to_dict() for r in results], "all_passed": all(r.passed for r in results),
            "skipped_ensemble": bool(cfg.skip_ensemble)}


HANDLERS = {
    "entry-exit": (cmd_entry_exit, False),
    "buffer": (cmd_buffer, False),
    "relief": (cmd_relief, True),
    "pushforward": (cmd_pushforward, True),
    "moments": (cmd_moments, False),
    "ensemble": (cmd_ensemble, True),
    "series-check": (cmd_series, False),
    "report": (cmd_report, False),
}


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_num) + "\n"


def run(argv) -> int:
    parser = build_parser()
    if not argv or (argv[0] not in COMMANDS and argv[0] not in ("-h", "--help", "--version")):
        parser.print_usage(sys.stderr)
        if argv:
            print(f"hopfuq: unknown command {argv[0]!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "quiet")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_values, flags)
    except (DomainError, ValueError, OSError) as exc:
        print(f"hopfuq: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handler, tabular = HANDLERS[args.command]
    try:
        phase = ComplexPhase(cfg.field())
        out = handler(cfg, phase)
    except (QuadratureError, DomainExhausted, IntegrationError, ArithmeticError) as exc:
        print(f"hopfuq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        print(f"hopfuq: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    doc, table = out if tabular else (out, None)
    doc = {"command": args.command, "config": cfg.to_dict(), "seed": cfg.seed, **doc}
    text = _dump(doc)
    if tabular:
        folder = _out_dir(cfg)
        _write(folder / f"{args.command}.csv", table)
        _write(folder / f"{args.command}.json", text)
    elif cfg.output_dir:
        _write(_out_dir(cfg) / f"{args.command}.json", text)
    if not args.quiet:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return run(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
