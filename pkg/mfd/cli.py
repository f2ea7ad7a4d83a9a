"""
Command-line front end.

Usage:
    python mfd_cli.py decompose data/fig2.graph --variant walk
    python mfd_cli.py decompose data/fig2.graph --variant trail-cg --json out.json
    python mfd_cli.py verify data/fig2.graph --witness out.json
    python mfd_cli.py gen --nodes 8 --elements 3 --variant walk --count 5 --seed 1 --output gen.graph
    python mfd_cli.py bench data/ --variants pc,trail-cg,trail-reach,walk
    MFD_SOLVER_BACKEND=scip python mfd_cli.py decompose data/fig2.graph

Exit codes: 0 ok, 1 error, 2 infeasible instance (with --fail-on-infeasible)
or failed verification, 3 solver backend unavailable.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union

import pandas as pd
from pydantic import ValidationError

import config
from errors import BackendUnavailableError, BudgetExceededError, MfdError
from graph import (
    generate_instance,
    parse_block,
    parse_graph_file,
    selection_from_nodes,
    serialize_graphs,
    split_instance_blocks,
)
from models import (
    Decomposition,
    DecompositionElement,
    ElementRecord,
    FlowNetwork,
    InstanceResult,
    Probe,
    ProbeVerdict,
    ResultFile,
    SearchOutcome,
    Strategy,
    VariantSpec,
)
from search import Budget, min_k, solve_fixed_k
from verify import verify_decomposition

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BACKEND = 3

VARIANT_CODES = ("pc", "trail-cg", "trail-reach", "walk")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _records(decomposition: Optional[Decomposition]) -> list[ElementRecord]:
    if decomposition is None:
        return []
    return [ElementRecord(kind=el.kind, nodes=el.nodes, weight=el.weight) for el in decomposition.elements]


def _write_text(path: Optional[str], text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(text)


def _parse_buckets(spec: str) -> list[tuple[str, int, float]]:
    """``"1-3,4-10,21-"`` -> [(label, low, high)]; an open upper end is infinite."""
    buckets = []
    for part in spec.split(","):
        low, _, high = part.strip().partition("-")
        buckets.append((part.strip(), int(low), float(high) if high else math.inf))
    return buckets


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------

def _decompose_one(network: FlowNetwork, variant: VariantSpec, args: argparse.Namespace) -> InstanceResult:
    try:
        return _solve_instance(network, variant, args)
    except BackendUnavailableError:
        raise
    except MfdError as exc:
        logger.error("%s: %s", network.name, exc)
        return InstanceResult(instance=network.name, variant=variant.cli_code, error=str(exc))


def _solve_instance(network: FlowNetwork, variant: VariantSpec, args: argparse.Namespace) -> InstanceResult:
    budget = Budget(args.timeout, args.total_timeout)
    result = InstanceResult(instance=network.name, variant=variant.cli_code)

    if args.exactly_k is not None:
        fixed = solve_fixed_k(network, args.exactly_k, variant, budget, lp_dir=args.lp_dir)
        result.probes = [
            Probe(
                k=fixed.k,
                verdict=fixed.verdict,
                seconds=fixed.seconds,
                cg_iterations=fixed.cg_iterations,
                components_added=len(fixed.components),
            )
        ]
        result.total_seconds = fixed.seconds
        result.cg_iterations = len(fixed.components)
        if fixed.verdict is ProbeVerdict.FEASIBLE:
            result.k_star = args.exactly_k
            result.elements = _records(fixed.decomposition)
        elif fixed.verdict is ProbeVerdict.INFEASIBLE:
            result.k_star = "infeasible"
        else:
            result.error = f"budget exceeded at k={args.exactly_k}"
        return result

    try:
        report = min_k(network, variant, Strategy(args.strategy), budget, lp_dir=args.lp_dir)
    except BudgetExceededError as exc:
        if exc.report is not None:
            result.probes = exc.report.probes
            result.cg_iterations = sum(exc.report.cg_iterations)
            result.total_seconds = exc.report.total_seconds
        result.error = str(exc)
        return result

    result.probes = report.probes
    result.cg_iterations = sum(report.cg_iterations)
    result.total_seconds = report.total_seconds
    if report.outcome is SearchOutcome.FOUND:
        result.k_star = report.k_star
        result.elements = _records(report.decomposition)
    else:
        result.k_star = "infeasible"
    return result


def cmd_decompose(args: argparse.Namespace) -> int:
    variant = VariantSpec.from_cli(args.variant, exactly_k=args.exactly_k is not None)
    text = Path(args.graph).read_text(encoding="utf-8")

    slots: list[Union[FlowNetwork, InstanceResult]] = []
    for first_line, lines in split_instance_blocks(text):
        try:
            network = parse_block(first_line, lines)
            logger.info("Parsed %s: n=%d, m=%d", network.name, network.node_count, network.edge_count)
            slots.append(network)
        except MfdError as exc:
            name = lines[0][1:].strip() if lines[0].startswith("#") else f"line {first_line}"
            logger.error("Instance %s rejected: %s", name, exc)
            slots.append(InstanceResult(instance=name, variant=variant.cli_code, error=str(exc)))

    def run(slot: Union[FlowNetwork, InstanceResult]) -> InstanceResult:
        if isinstance(slot, InstanceResult):
            return slot
        return _decompose_one(slot, variant, args)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(run, slots))

    payload = ResultFile(results=results).model_dump_json(by_alias=True, indent=2) + "\n"
    _write_text(args.json, payload)

    for res in results:
        if res.error is None:
            logger.info("%s %s: k* = %s (%.3fs)", res.instance, res.variant, res.k_star, res.total_seconds)
    if any(res.error is not None for res in results):
        return EXIT_ERROR
    if args.fail_on_infeasible and any(res.k_star == "infeasible" for res in results):
        return EXIT_INFEASIBLE
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _decomposition_from_record(network: FlowNetwork, record: InstanceResult, variant: VariantSpec) -> Decomposition:
    elements = tuple(
        DecompositionElement(
            kind=el.kind,
            nodes=el.nodes,
            multiplicity=selection_from_nodes(network, el.nodes),
            weight=el.weight,
        )
        for el in record.elements
    )
    return Decomposition(elements=elements, variant=variant)


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        networks = {n.name: n for n in parse_graph_file(Path(args.graph).read_text(encoding="utf-8"))}
        witness = ResultFile.model_validate_json(Path(args.witness).read_text(encoding="utf-8"))
    except (OSError, ValidationError, MfdError) as exc:
        logger.error("Cannot load inputs: %s", exc)
        return EXIT_ERROR

    failures = 0
    for record in witness.results:
        if record.error is not None or record.k_star == "infeasible":
            continue
        network = networks.get(record.instance)
        if network is None:
            print(f"{record.instance}: no such instance in {args.graph}")
            failures += 1
            continue
        try:
            variant = VariantSpec.from_cli(args.variant or record.variant)
        except ValueError as exc:
            logger.error("%s: %s", record.instance, exc)
            return EXIT_ERROR
        try:
            decomposition = _decomposition_from_record(network, record, variant)
        except KeyError as exc:
            print(f"{record.instance}: {exc.args[0]}")
            failures += 1
            continue
        k = record.k_star if isinstance(record.k_star, int) else None
        problems = verify_decomposition(network, decomposition, variant, k)
        if problems:
            failures += 1
            for problem in problems:
                print(f"{record.instance}: {problem}")
        else:
            print(f"{record.instance}: ok ({decomposition.size} {variant.cli_code} element(s))")
    return EXIT_INFEASIBLE if failures else EXIT_OK


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    variant = VariantSpec.from_cli(args.variant)
    generated = [
        generate_instance(args.nodes, args.elements, variant, args.seed + j, max_weight=args.max_weight)
        for j in range(args.count)
    ]
    sidecar = ResultFile(
        results=[
            InstanceResult(
                instance=g.network.name,
                variant=variant.cli_code,
                elements=_records(g.decomposition),
            )
            for g in generated
        ]
    )
    _write_text(args.output, serialize_graphs(g.network for g in generated))
    if args.output:
        _write_text(os.path.splitext(args.output)[0] + ".json", sidecar.model_dump_json(by_alias=True, indent=2) + "\n")
    logger.info("Generated %d %s instance(s).", len(generated), variant.cli_code)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bench_instance(network: FlowNetwork, variants: list[VariantSpec], args: argparse.Namespace) -> dict:
    row: dict = {"instance": network.name, "n": network.node_count, "m": network.edge_count}
    for variant in variants:
        col = variant.cli_code.replace("-", "_")
        try:
            report = min_k(network, variant, Strategy(args.strategy), Budget(args.timeout, args.total_timeout))
        except BudgetExceededError as exc:
            logger.warning("%s %s: %s", network.name, variant.cli_code, exc)
            row.update({f"{col}_k": math.nan, f"{col}_feasible": math.nan, f"{col}_seconds": math.nan})
            continue
        found = report.outcome is SearchOutcome.FOUND
        row[f"{col}_k"] = float(report.k_star) if found else math.nan
        row[f"{col}_feasible"] = 1.0 if found else 0.0
        row[f"{col}_seconds"] = report.total_seconds
        row[f"{col}_cg"] = float(sum(report.cg_iterations))
        if found and report.decomposition is not None:
            row[f"{col}_paths"] = float(report.decomposition.path_count)
            row[f"{col}_cycles"] = float(report.decomposition.cycle_count)
    return row


def bench_summary(rows: list[dict], codes: list[str], buckets: str) -> pd.DataFrame:
    """One row per k bucket: instance count, size statistics and per-variant averages."""
    df = pd.DataFrame(rows)
    cols = [c.replace("-", "_") for c in codes]
    key = f"{cols[0]}_k" if "pc" not in codes else "pc_k"
    ranges = _parse_buckets(buckets)

    def label(k: float) -> Optional[str]:
        if pd.isna(k):
            return None
        return next((name for name, low, high in ranges if low <= k <= high), None)

    df["bucket"] = pd.Categorical(df[key].map(label), categories=[r[0] for r in ranges], ordered=True)
    dropped = int(df["bucket"].isna().sum())
    if dropped:
        logger.warning("%d instance(s) fall outside every bucket and are left out.", dropped)

    agg: dict[str, tuple[str, str]] = {
        "instances": ("instance", "count"),
        "n_mean": ("n", "mean"),
        "n_std": ("n", "std"),
        "m_mean": ("m", "mean"),
        "m_std": ("m", "std"),
    }
    for col in cols:
        agg[f"{col}_k_mean"] = (f"{col}_k", "mean")
        agg[f"{col}_k_std"] = (f"{col}_k", "std")
        agg[f"{col}_seconds_mean"] = (f"{col}_seconds", "mean")
        agg[f"{col}_seconds_std"] = (f"{col}_seconds", "std")
        if col == "trail_cg" and f"{col}_cg" in df:
            agg["trail_cg_iterations_mean"] = (f"{col}_cg", "mean")
        if col == "pc" and "pc_paths" in df:
            agg["pc_paths_mean"] = ("pc_paths", "mean")
            agg["pc_cycles_mean"] = ("pc_cycles", "mean")
    trail_col = next((c for c in ("trail_cg", "trail_reach") if c in cols), None)
    if trail_col:
        agg["trail_feasible_pct"] = (f"{trail_col}_feasible", "mean")

    summary = df.groupby("bucket", observed=True).agg(**agg).reset_index()
    if trail_col:
        summary["trail_feasible_pct"] = summary["trail_feasible_pct"] * 100.0
    return summary.round(3)


def cmd_bench(args: argparse.Namespace) -> int:
    paths = sorted(Path(args.instances).glob("*.graph"))
    if not paths:
        logger.error("No *.graph files in %s", args.instances)
        return EXIT_ERROR
    codes = [c.strip() for c in args.variants.split(",") if c.strip()]
    variants = [VariantSpec.from_cli(c) for c in codes]

    networks: list[FlowNetwork] = []
    for path in paths:
        try:
            networks.extend(parse_graph_file(path.read_text(encoding="utf-8")))
        except MfdError as exc:
            logger.error("Skipping %s: %s", path, exc)
    if not networks:
        logger.error("No valid instances in %s", args.instances)
        return EXIT_ERROR

    rows = []
    for idx, network in enumerate(networks, start=1):
        logger.info("Benchmarking %s (%d/%d)", network.name, idx, len(networks))
        rows.append(_bench_instance(network, variants, args))

    summary = bench_summary(rows, codes, args.buckets)
    _write_text(args.output, summary.to_csv(index=False))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing & entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Minimum flow decomposition into paths or cycles, trails, or walks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="Find a minimum decomposition of every instance in a graph file.")
    dec.add_argument("graph", help="Graph file with one or more instances.")
    dec.add_argument("--variant", choices=VARIANT_CODES, default="pc")
    dec.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.DOUBLING.value)
    dec.add_argument(
        "--exactly-k", type=int, default=None, metavar="K",
        help="Decide only whether a decomposition with exactly K elements exists.",
    )
    dec.add_argument("--timeout", type=float, default=config.PROBE_TIMEOUT, help="Seconds per probe.")
    dec.add_argument("--total-timeout", type=float, default=config.TOTAL_TIMEOUT, help="Seconds per instance.")
    dec.add_argument("--json", default=None, help="Write results here instead of stdout.")
    dec.add_argument("--fail-on-infeasible", action="store_true", help="Exit 2 if any instance is infeasible.")
    dec.add_argument("--workers", type=int, default=1, help="Instances solved concurrently.")
    dec.add_argument("--lp-dir", default=None, help="Write every built model in LP format into this directory.")
    dec.set_defaults(func=cmd_decompose)

    ver = sub.add_parser("verify", help="Check witness decompositions against a graph file.")
    ver.add_argument("graph")
    ver.add_argument("--witness", required=True, help="JSON written by 'decompose' or 'gen'.")
    ver.add_argument("--variant", choices=VARIANT_CODES, default=None, help="Override the recorded variant.")
    ver.set_defaults(func=cmd_verify)

    gen = sub.add_parser("gen", help="Generate random instances with a known decomposition.")
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--elements", type=int, required=True)
    gen.add_argument("--variant", choices=VARIANT_CODES, default="walk")
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--max-weight", type=int, default=config.GENERATOR_MAX_WEIGHT)
    gen.add_argument("--output", default=None, help="Graph file; the decompositions go next to it as .json.")
    gen.set_defaults(func=cmd_gen)

    bench = sub.add_parser("bench", help="Summarize minimum sizes and runtimes per k bucket as CSV.")
    bench.add_argument("instances", help="Directory of *.graph files.")
    bench.add_argument("--variants", default=",".join(VARIANT_CODES))
    bench.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.DOUBLING.value)
    bench.add_argument("--buckets", default=config.BENCH_BUCKETS)
    bench.add_argument("--timeout", type=float, default=config.PROBE_TIMEOUT)
    bench.add_argument("--total-timeout", type=float, default=config.TOTAL_TIMEOUT)
    bench.add_argument("--output", default=None, help="CSV path (default: stdout).")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL, logging.INFO),
        format="%(asctime)s  %(levelname)-8s  %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BackendUnavailableError as exc:
        logger.error("%s", exc)
        return EXIT_BACKEND
    except (OSError, ValueError, MfdError) as exc:
        logger.error("%s failed: %s", args.command, exc, exc_info=logger.isEnabledFor(logging.DEBUG))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
