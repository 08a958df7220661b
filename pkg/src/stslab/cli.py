"""Command-line front end: generation, audits, packing, pipeline runs.

Reproducibility contract: every run is determined by its flags plus
--seed. Trial i of a multi-trial run uses the derived stream
seeding.spawn(master_seed, i), so any subset of trials can be re-run in
isolation. Reports never include wall-clock time unless --timing is
given (timing breaks byte-identical reruns, so it is opt-in).

CSV outputs start with a "# schema=..." line naming their layout; JSON
outputs are emitted with sorted keys. Exit status is nonzero only for
configuration or I/O errors — an experiment that finds nothing still
exits 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

from . import seeding
from .core import DomainError, TripleSystem, load_sts, to_sts_text
from . import generate
from . import quasirandom
from . import matching
from . import absorbers
from . import partition as partition_mod
from . import pipeline as pipeline_mod

SCHEMA_PREFIX = "stslab"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(schema: str, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_PREFIX}.{schema}.v1\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _run_trials(trials: int, threads: int, fn: Callable[[int], Sequence]):
    """fn(trial_index) -> row; rows come back in trial order regardless of threads."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(trials)))
    return [fn(i) for i in range(trials)]


def _load(path: str) -> TripleSystem:
    try:
        return load_sts(path)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc


def _maybe_time(row: list, timing: bool, started: float) -> list:
    if timing:
        row.append(time.perf_counter() - started)
    return row


def _table(args, schema: str, columns: list[str], rows: list[list]) -> str:
    if args.timing:
        columns = columns + ["wall_time"]
    if args.format == "json":
        return _json_text([dict(zip(columns, row)) for row in rows])
    return _csv_text(schema, columns, rows)


# -- gen ------------------------------------------------------------------


def cmd_gen(args) -> int:
    n = args.n
    if args.mode == "sts" and not (n >= 3 and n % 6 in (1, 3)):
        raise DomainError("n must be congruent to 1 or 3 (mod 6)")
    if args.mode == "binomial" and n < 3:
        raise DomainError("binomial generation needs n >= 3")
    single_file = args.trials == 1 and args.out and args.out.endswith(".sts")

    def run(t: int) -> tuple[list, Optional[TripleSystem]]:
        s = seeding.spawn(args.seed, t)
        started = time.perf_counter()
        if args.mode == "sts":
            sys_t = generate.complete_to_sts(n, s)
            ok = sys_t is not None
            row = [t, s, n, len(sys_t.edges) if ok else 0, ok]
            out = sys_t
        elif args.mode == "trp":
            m = args.m if args.m is not None else n * (n - 1) // 6
            trp = generate.triangle_removal(n, m, s)
            row = [t, s, n, m, trp.steps_completed, trp.aborted, trp.leave.pair_count]
            out = trp.system.base
        elif args.mode == "binomial":
            p = args.alpha / (n - 2)
            sys_t = generate.sample_binomial_3graph(n, p, s)
            row = [t, s, n, p, len(sys_t.edges)]
            out = sys_t
        else:  # couple
            rep = generate.couple(TripleSystem(n, [], kind="linear"), args.alpha, s)
            row = [t, s, n, args.alpha, rep.q, rep.g_edge_count, rep.y, rep.target, rep.success]
            out = None
        return _maybe_time(row, args.timing, started), out

    if single_file:
        _row, system_out = run(0)
        if system_out is None:
            print("no system produced (hill climb budget exhausted)")
            return 0
        _emit(to_sts_text(system_out), args.out)
        return 0
    rows = [pair[0] for pair in _run_trials(args.trials, args.threads, run)]
    columns = {
        "sts": ["trial", "seed", "n", "edges", "success"],
        "trp": ["trial", "seed", "n", "m", "steps_completed", "aborted", "leave_pairs"],
        "binomial": ["trial", "seed", "n", "p", "edges"],
        "couple": ["trial", "seed", "n", "alpha", "q", "g_edges", "y", "target", "success"],
    }[args.mode]
    _emit(_table(args, f"gen.{args.mode}", columns, rows), args.out)
    return 0


# -- audit ----------------------------------------------------------------


def cmd_audit(args) -> int:
    system = _load(getattr(args, "in"))
    n = system.n
    started = time.perf_counter()
    columns = [
        "check", "n", "m", "epsilon", "h", "alpha", "beta", "p",
        "metric", "value", "passed", "exact", "samples", "seed",
    ]
    blank = ""
    if args.check == "quasi":
        graph = system.leave_graph()
        mode = "exact" if (args.h <= 2 or n <= 60) else "sampled"
        rep = quasirandom.check_quasirandom(
            graph, args.eps, args.h, mode=mode, samples=args.samples, seed=args.seed
        )
        row = [
            "quasi", n, len(system.edges), args.eps, args.h, blank, blank, blank,
            "max_deviation", rep.max_deviation, rep.passed, mode == "exact",
            rep.samples, args.seed,
        ]
    elif args.check == "upper":
        alpha = args.alpha if args.alpha is not None else system.estimate_alpha()
        p = alpha / n if n else 1.0
        rep = quasirandom.upper_quasi_defect(system, p, samples=args.samples, seed=args.seed)
        passed = rep.beta_hat <= args.beta if args.beta is not None else blank
        row = [
            "upper", n, len(system.edges), blank, blank, alpha,
            args.beta if args.beta is not None else blank, p,
            "beta_hat", rep.beta_hat, passed, rep.exact, rep.samples, args.seed,
        ]
    elif args.check == "disc":
        rep = quasirandom.discrepancy(system, samples=args.samples, seed=args.seed)
        row = [
            "disc", n, len(system.edges), blank, blank, blank, blank, blank,
            "max_abs_deviation", rep.max_abs_deviation, blank, rep.exact,
            rep.samples, args.seed,
        ]
    else:  # good
        alpha = args.alpha if args.alpha is not None else system.estimate_alpha()
        beta = args.beta if args.beta is not None else 0.1
        rep = quasirandom.audit_goodness(
            system, alpha, beta, resilience_samples=args.samples_resilience,
            seed=args.seed, upper_samples=args.samples,
        )
        passed = rep.regularity_pass and rep.upper_quasi_pass and rep.resilience_pass
        row = [
            "good", n, len(system.edges), blank, blank, alpha, beta, alpha / n if n else 1.0,
            "beta_hat", rep.beta_hat, passed, False, args.samples, args.seed,
        ]
    _emit(_table(args, "audit", columns, [_maybe_time(row, args.timing, started)]), args.out)
    return 0


# -- pack / resolve / decompose -------------------------------------------


def cmd_pack(args) -> int:
    system = _load(getattr(args, "in"))
    pms = matching.pack_disjoint_pms(system, budget=args.budget, seed=args.seed)
    if args.out:
        matching.save_res(system.n, pms, args.out)
    print(f"packed {len(pms)} disjoint perfect matchings")
    return 0


def cmd_resolve(args) -> int:
    system = _load(getattr(args, "in"))
    result = matching.resolve(system, budget=args.budget)
    if result.resolution is not None:
        if args.out:
            matching.save_res(system.n, list(result.resolution.classes), args.out)
        print(f"resolvable: {len(result.resolution.classes)} classes")
    elif result.certified:
        print("not resolvable (certified)")
    else:
        print(f"unknown: budget exhausted after {result.nodes} nodes")
    return 0


def cmd_decompose(args) -> int:
    system = _load(getattr(args, "in"))
    rep = matching.ps_decompose(system, improvement_passes=args.passes)
    if args.out:
        matching.save_res(system.n, list(rep.matchings), args.out)
    sizes = [len(m) for m in rep.matchings]
    print(
        f"{rep.colors_used} classes (sizes {min(sizes) if sizes else 0}"
        f"..{max(sizes) if sizes else 0})"
    )
    return 0


# -- absorb ---------------------------------------------------------------


def _parse_vertices(text: str, what: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p != ""]
    except ValueError:
        raise DomainError(f"{what} must be a comma-separated vertex list, got {text!r}") from None


def cmd_absorb(args) -> int:
    if args.mode == "template":
        tmpl = absorbers.build_template(args.q, args.seed, removal_samples=args.samples)
        text = (
            f"# resilient template q={tmpl.q} flexible=1..{2 * tmpl.q}\n"
            f"# verified_removals={tmpl.verified_removals} exhaustive={tmpl.exhaustive}\n"
            "# kind: general (port pairs repeat across edges)\n"
            + to_sts_text(tmpl.system())
        )
        _emit(text, args.out)
        if args.out:
            print(
                f"template q={tmpl.q}: max degree {tmpl.max_degree()}, "
                f"{tmpl.verified_removals} removals verified"
            )
        return 0
    if getattr(args, "in") is None:
        raise DomainError(f"absorb --mode {args.mode} needs --in")
    host = _load(getattr(args, "in"))
    if args.mode in ("sub", "full"):
        if args.roots is None:
            raise DomainError("sub/full modes need --roots x,y,z")
        roots = _parse_vertices(args.roots, "--roots")
        if len(roots) != 3:
            raise DomainError("--roots needs exactly three vertices for sub/full modes")
        if args.mode == "sub":
            found = absorbers.find_sub_absorber(host, *roots, budget=args.budget)
            if found is None:
                print("no sub-absorber found")
                return 0
            text = (
                f"# sub-absorber roots: {roots[0]} {roots[1]} {roots[2]}\n"
                f"# externals: {' '.join(map(str, found.externals))}\n"
                + to_sts_text(TripleSystem(host.n, found.edges))
            )
            _emit(text, args.out)
            if args.out:
                print("sub-absorber found")
            return 0
        found = absorbers.find_absorber(host, *roots, budget=args.budget)
        if found is None:
            print("no absorber found")
            return 0
        cov = " | ".join(" ".join(map(str, e)) for e in found.covering_matching().edges)
        non = " | ".join(" ".join(map(str, e)) for e in found.noncovering_matching().edges)
        text = (
            f"# absorber roots: {roots[0]} {roots[1]} {roots[2]}\n"
            f"# externals: {' '.join(map(str, found.externals))}\n"
            f"# covering: {cov}\n"
            f"# noncovering: {non}\n"
            + to_sts_text(TripleSystem(host.n, found.edges))
        )
        _emit(text, args.out)
        if args.out:
            print("absorber found")
        return 0
    # structure
    flexible = _parse_vertices(args.flexible or args.roots or "", "--flexible")
    if not flexible:
        raise DomainError("structure mode needs --flexible (even-sized vertex list)")
    structure = absorbers.assemble_absorbing_structure(
        host, flexible, budget=args.budget, seed=args.seed, removal_samples=args.samples
    )
    if structure is None:
        print("no absorbing structure assembled")
        return 0
    text = (
        f"# absorbing structure: q={structure.template.q} "
        f"flexible: {' '.join(map(str, structure.flexible))}\n"
        f"# slots: {' '.join(map(str, structure.slot_map))}\n"
        + to_sts_text(TripleSystem(host.n, sorted(structure.all_edges())))
    )
    _emit(text, args.out)
    if args.out:
        print(
            f"structure with {len(structure.absorbers)} absorbers, "
            f"{structure.edge_count()} edges"
        )
    return 0


# -- partition ------------------------------------------------------------


def cmd_partition(args) -> int:
    system = _load(getattr(args, "in"))
    bundle = partition_mod.good_partition(system, args.delta, args.seed)
    audit = partition_mod.audit_partition(
        bundle, system, spotcheck_resilience=args.spotcheck
    )
    manifest = {
        "n": bundle.n,
        "m": bundle.m,
        "delta": bundle.delta,
        "ell": bundle.ell,
        "ell_uncapped": bundle.ell_uncapped,
        "cap_binding": bundle.cap_binding,
        "p_f": bundle.p_f,
        "p_h": bundle.p_h,
        "p_g": bundle.p_g,
        "kappa": bundle.kappa,
        "seed": bundle.seed,
        "U": [sorted(u) for u in bundle.U],
        "W": [sorted(w) for w in bundle.W],
        "part_sizes": bundle.part_sizes(),
        "audit": {
            "partition_exact": audit.partition_exact,
            "shapes_ok": audit.shapes_ok,
            "properties": list(audit.property_flags()),
            "alpha_hat": audit.alpha_hat,
            "stats": audit.stats,
        },
    }
    if args.out_prefix:
        for name, parts in (("G", bundle.G), ("H", bundle.H), ("F", bundle.F)):
            for i, ids in enumerate(parts):
                part_system = system.subsystem(sorted(ids))
                with open(f"{args.out_prefix}.{name}{i}.sts", "w", encoding="ascii") as fh:
                    fh.write(to_sts_text(part_system))
        with open(f"{args.out_prefix}.Q.sts", "w", encoding="ascii") as fh:
            fh.write(to_sts_text(system.subsystem(sorted(bundle.Q))))
        with open(f"{args.out_prefix}.manifest.json", "w", encoding="ascii") as fh:
            fh.write(_json_text(manifest))
        print(
            f"wrote {3 * bundle.ell + 1} part files and manifest "
            f"under prefix {args.out_prefix}"
        )
        return 0
    _emit(_json_text(manifest), args.out)
    return 0


# -- pipeline -------------------------------------------------------------


PIPELINE_COLUMNS = [
    "trial", "seed", "n", "delta", "budget", "pms", "coverage",
    "classes_considered", "classes_direct", "bridge_edges_used", "bridge_misses",
    "absorb_attempted", "absorb_cap_binding", "absorb_completed", "absorb_failed",
    "fallback_exact_attempts", "fallback_exact_success", "fallback_drop",
    "residual_pms", "rounds",
]


def cmd_pipeline(args) -> int:
    in_path = getattr(args, "in")
    if (in_path is None) == (args.gen is None):
        raise DomainError("pipeline needs exactly one of --in or --gen")
    host_fixed = _load(in_path) if in_path else None

    def run(t: int):
        s = seeding.spawn(args.seed, t)
        started = time.perf_counter()
        if host_fixed is not None:
            host = host_fixed
        else:
            host = generate.complete_to_sts(args.gen, seeding.spawn(s, 7))
            if host is None:
                raise DomainError(f"could not generate an STS({args.gen}) host")
        report = pipeline_mod.almost_resolve(
            host, delta=args.delta, seed=s, budget=args.budget,
            force_absorb=args.force_absorb,
        )
        st = report.stats
        row = [
            t, s, report.n, report.delta, args.budget,
            len(report.matchings), report.coverage,
            st["classes_considered"], st["classes_direct"],
            st["bridge_edges_used"], st["bridge_misses"],
            st["absorb_attempted"], st["absorb_cap_binding"],
            st["absorb_completed"], st["absorb_failed"],
            st["fallback_exact_attempts"], st["fallback_exact_success"],
            st["fallback_drop"], st["residual_pms"], st["rounds"],
        ]
        return _maybe_time(row, args.timing, started), report

    results = _run_trials(args.trials, args.threads, run)
    rows = [pair[0] for pair in results]
    if args.out and args.out.endswith(".res") and args.trials == 1:
        report = results[0][1]
        matching.save_res(report.n, list(report.matchings), args.out)
        print(f"pipeline packed {len(report.matchings)} matchings")
        return 0
    _emit(_table(args, "pipeline", PIPELINE_COLUMNS, rows), args.out)
    return 0


# -- couple-test ----------------------------------------------------------


def cmd_couple_test(args) -> int:
    n, alpha = args.n, args.alpha
    started = time.perf_counter()
    total_y = 0
    ys = []
    q = None
    for t in range(args.trials):
        s = seeding.spawn(args.seed, t)
        rep = generate.couple(TripleSystem(n, [], kind="linear"), alpha, s)
        q = rep.q
        total_y += rep.y
        ys.append(rep.y)
    target = alpha * math.comb(n, 2) / 3
    pred = q * (1 - q) ** (3 * (n - 3) + 1) if q is not None else 0.0
    # Survival is unconditional (edge present AND isolated), so the sample
    # space is every triple of every trial, not just the sampled edges.
    denom = args.trials * math.comb(n, 3)
    emp = total_y / denom if denom else 0.0
    se = math.sqrt(pred * (1 - pred) / denom) if denom else 0.0
    z = (emp - pred) / se if se else 0.0
    mean_y = total_y / args.trials if args.trials else 0.0
    sd_y = (
        math.sqrt(sum((y - mean_y) ** 2 for y in ys) / (args.trials - 1))
        if args.trials > 1
        else 0.0
    )
    z_y = (mean_y - target) / (sd_y / math.sqrt(args.trials)) if sd_y else 0.0
    columns = [
        "n", "alpha", "trials", "seed", "q", "predicted_survival",
        "empirical_survival", "se_survival", "z_survival",
        "mean_y", "target_y", "sd_y", "z_y",
    ]
    row = _maybe_time(
        [n, alpha, args.trials, args.seed, q, pred, emp, se, z, mean_y, target, sd_y, z_y],
        args.timing,
        started,
    )
    _emit(_table(args, "couple_test", columns, [row]), args.out)
    return 0


# -- parser ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="stslab",
        description="Steiner triple system workbench: generation, audits, "
        "matchings, absorbers, partitions, and the packing pipeline.",
        epilog="Seed derivation: trial i uses splitmix64(master_seed + (i+1) * "
        "0x9E3779B97F4A7C15); see stslab.seeding.spawn.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--trials", type=int, default=1, help="trial count (default 1)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for trials")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="table format"
    )
    common.add_argument(
        "--timing", action="store_true",
        help="append wall-clock time (breaks byte-identical reruns)",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate systems")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None, help="steps for trp mode")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--mode", choices=("sts", "trp", "binomial", "couple"), default="sts")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("audit", parents=[common], help="quasirandomness audits")
    p.add_argument("--in", required=True)
    p.add_argument("--check", choices=("quasi", "upper", "disc", "good"), required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--h", type=int, default=2)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--samples-resilience", type=int, default=2)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("pack", parents=[common], help="pack disjoint perfect matchings")
    p.add_argument("--in", required=True)
    p.add_argument("--budget", type=int, default=200_000)
    p.set_defaults(fn=cmd_pack)

    p = sub.add_parser("resolve", parents=[common], help="exact resolvability search")
    p.add_argument("--in", required=True)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(fn=cmd_resolve)

    p = sub.add_parser("decompose", parents=[common], help="matching decomposition")
    p.add_argument("--in", required=True)
    p.add_argument("--passes", type=int, default=12)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("absorb", parents=[common], help="absorber search / templates")
    p.add_argument("--in", default=None)
    p.add_argument("--roots", default=None, help="x,y,z for sub/full modes")
    p.add_argument("--mode", choices=("sub", "full", "template", "structure"), required=True)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--flexible", default=None, help="flexible set for structure mode")
    p.set_defaults(fn=cmd_absorb)

    p = sub.add_parser("partition", parents=[common], help="randomized good partition")
    p.add_argument("--in", required=True)
    p.add_argument("--delta", type=float, default=0.16)
    p.add_argument("--out-prefix", default=None)
    p.add_argument("--spotcheck", action="store_true", help="run resilience spot-checks")
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("pipeline", parents=[common], help="end-to-end packing pipeline")
    p.add_argument("--in", default=None)
    p.add_argument("--gen", type=int, default=None, help="generate an STS(n) host per trial")
    p.add_argument("--delta", type=float, default=0.16)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--force-absorb", action="store_true")
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("couple-test", parents=[common], help="binomial coupling statistics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(fn=cmd_couple_test)
    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
