"""Command-line entry point: ``ici infer`` and ``ici bench``."""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
from pathlib import Path
import sys

from . import netfile
from .bench import (ANSWERABLE_COST, PRESETS, generate_network, preset, run_query_cost_sweep,
                    run_variable_cost_sweep)
from .engine import ENGINES, infer, posterior
from .errors import IciError, UsageError
from .factor import Factor
from .model import Network, Query
from .oracle import DEFAULT_BOUND
from .ordering import HEURISTICS

OUT_DIR_ENV = "ICI_OUT_DIR"
DIGITS = 12

log = logging.getLogger("ici")


def _fmt(x: float) -> str:
    return format(float(x), f".{DIGITS}g")


def format_table(network: Network, f: Factor) -> str:
    """Tab-separated table: one column per scope variable, then ``p``."""
    names = [network.var(v).name for v in f.scope]
    rows = ["\t".join(names + ["p"])]
    for idx, value in zip(itertools.product(*map(range, f.cards)), f.flat):
        states = [network.var(v).state_name(i) for v, i in zip(f.scope, idx)]
        rows.append("\t".join(states + [_fmt(value)]))
    return "\n".join(rows)


def _parse_evidence(items) -> list[tuple[str, str]]:
    out = []
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name or not value:
            raise UsageError(f"evidence must look like name=value, got {item!r}")
        out.append((name, value))
    return out


def cmd_infer(args) -> int:
    net = netfile.load(args.net)
    query = Query.from_names(net, args.target, _parse_evidence(args.evidence))
    result = infer(net, query, args.engine, args.heuristic, args.bound)
    out = sys.stdout
    print("# P(X, Y=Y0)", file=out)
    print(format_table(net, result.answer), file=out)
    print(f"# P(Y=Y0)\t{_fmt(result.evidence_probability)}", file=out)
    if args.report_cost:
        cost = result.cost.to_dict() if result.cost else None
        print("# cost\t" + json.dumps(cost, sort_keys=True), file=out)
    if not args.no_posterior:
        post = posterior(result)
        print("# P(X | Y=Y0)", file=out)
        print(format_table(net, post), file=out)
    return 0


def _write_variable_table(net: Network, ici, ve, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "ici_cost", "ve_cost"])
        for v, a, b in zip(net.variables, ici.costs, ve.costs):
            w.writerow([v.name, a, b])


def cmd_bench(args) -> int:
    if args.net:
        net = netfile.load(args.net)
        source = Path(args.net).stem
    else:
        net = generate_network(preset(args.gen, args.seed))
        source = f"{args.gen}-seed{args.seed}"
    out = Path(args.out or os.environ.get(OUT_DIR_ENV) or "ici-out")
    out.mkdir(parents=True, exist_ok=True)
    if args.save_network:
        netfile.save(net, args.save_network)
    h = args.heuristic
    written = []
    summaries = []
    if args.variables:
        ici, ve = run_variable_cost_sweep(net, h, args.jobs)
        stem = f"variables_{h}"
        written.append(ici.write_csv(out / f"{stem}_ici.csv"))
        written.append(ve.write_csv(out / f"{stem}_ve.csv"))
        table = out / f"{stem}.csv"
        _write_variable_table(net, ici, ve, table)
        written.append(table)
        summaries += [ici.summary(args.threshold), ve.summary(args.threshold)]
        if not args.no_plot:
            from .plots import plot_cnv
            written.append(plot_cnv({"ICI": ici, "VE": ve}, out / f"{stem}.png",
                                    f"{source}: variables by cost ({h})", args.threshold))
    ks = args.k if args.k else ([] if args.variables else [5, 10, 20])
    dists = {}
    for k in ks:
        dist = run_query_cost_sweep(net, k, args.queries, h, args.seed, args.jobs)
        written.append(dist.write_csv(out / f"queries_k{k}_{h}.csv"))
        summaries.append(dist.summary(args.threshold))
        dists[f"k={k}"] = dist
    if dists and not args.no_plot:
        from .plots import plot_cnv
        name = "queries_" + "_".join(f"k{k}" for k in ks) + f"_{h}.png"
        written.append(plot_cnv(dists, out / name, f"{source}: queries by ICI cost ({h})",
                                args.threshold))
    summary = "\n".join([f"# {source}: {len(net)} variables, {len(net.convergent())} convergent"]
                        + summaries) + "\n"
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    for path in written:
        log.info("wrote %s", path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ici", description="Exact inference with causal independence.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("infer", help="answer one query")
    q.add_argument("--net", required=True, help="network JSON file")
    q.add_argument("--target", action="append", default=[], help="query variable (repeatable)")
    q.add_argument("--evidence", action="append", default=[], metavar="NAME=VALUE",
                   help="observation by state name or index (repeatable)")
    q.add_argument("--engine", choices=ENGINES, default="ici")
    q.add_argument("--heuristic", choices=HEURISTICS, default="mindef")
    q.add_argument("--report-cost", action="store_true", help="print the cost report as JSON")
    q.add_argument("--no-posterior", action="store_true", help="skip the normalised posterior")
    q.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="oracle cell budget")
    q.set_defaults(func=cmd_infer)

    b = sub.add_parser("bench", help="cost-distribution sweeps")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--net", help="network JSON file")
    src.add_argument("--gen", choices=sorted(PRESETS), help="generator preset")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--k", type=int, action="append", default=[],
                   help="observations per query (repeatable; default 5, 10, 20)")
    b.add_argument("--queries", type=int, default=100)
    b.add_argument("--variables", action="store_true", help="zero-observation sweep over all variables")
    b.add_argument("--heuristic", choices=HEURISTICS, default="mindef")
    b.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./ici-out)")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--threshold", type=int, default=ANSWERABLE_COST, help="answerable cost bound")
    b.add_argument("--no-plot", action="store_true")
    b.add_argument("--save-network", help="also write the network used to this path")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except IciError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
