"""Command line entry point: ``fairdag run|compare|check|sweep``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, FairDagError, IoError
from .harness import Simulation, run
from .metrics import report, run_checkers
from .scenario import Scenario, load_scenario
from .trace import RunTrace

log = logging.getLogger("fairdag")


def parse_seeds(text: str) -> list[int]:
    """"1-5,9" -> [1, 2, 3, 4, 5, 9]."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def _scenario(args, protocol: str | None = None, seed: int | None = None) -> Scenario:
    sc = load_scenario(args.scenario) if args.scenario else Scenario()
    if protocol or getattr(args, "protocol", None):
        sc = replace(sc, protocol=protocol or args.protocol)
    if seed is not None:
        sc = replace(sc, seed=seed)
    elif getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    return sc.validate()


def _write(path: str, text: str) -> None:
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _summary(name: str, rep, wall: float) -> None:
    state = "PASS" if rep.passed else "FAIL"
    checks = ", ".join(f"{k}={v}" for k, v in sorted(rep.verdicts.items()))
    print(f"{name}: {state} runs={rep.runs} mode={rep.mode} [{checks}] wall={wall:.2f}s")


def cmd_run(args) -> int:
    sc = _scenario(args)
    t0 = time.perf_counter()
    graphs_for = sc.correct_ids[0] if args.graphs_out else None
    if sc.protocol in ("AB", "RL"):
        sim = Simulation(sc, graphs_for=graphs_for)
        trace = sim.run()
        if args.dag_out:
            _write(args.dag_out, "\n".join(sim.dag_dump()) + "\n")
        if args.graphs_out:
            _write(args.graphs_out, json.dumps(sim.graph_log, indent=1, sort_keys=True) + "\n")
    else:
        if args.dag_out or args.graphs_out:
            log.warning("--dag-out/--graphs-out apply only to AB and RL runs")
        trace = run(sc)
    if args.trace_out:
        trace.write(args.trace_out)
    rep = report([trace], out_dir=args.out_dir, stem=f"{sc.protocol.lower()}_seed{sc.seed}")
    _summary(f"{sc.protocol} seed={sc.seed}", rep, time.perf_counter() - t0)
    for v in rep.violations[:10]:
        print("  " + v)
    return 0 if rep.passed else 1


def _many(sc_for, seeds, jobs: int) -> list[RunTrace]:
    if jobs == 1:
        return [run(sc_for(s)) for s in seeds]
    from joblib import Parallel, delayed

    # results come back in seed order, so merged output stays deterministic
    return Parallel(n_jobs=jobs)(delayed(run)(sc_for(s)) for s in seeds)


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    base = _scenario(args)
    traces = _many(lambda s: replace(base, seed=s), args.seeds, args.jobs)
    rep = report(traces, out_dir=args.out_dir, stem=f"{base.protocol.lower()}_sweep")
    _summary(f"{base.protocol} sweep", rep, time.perf_counter() - t0)
    return 0 if rep.passed else 1


def cmd_compare(args) -> int:
    protocols = args.protocols or ["AB", "POMPE_LITE"]
    if len(protocols) != 2:
        raise ConfigError("compare takes exactly two protocols")
    ok = True
    reports = []
    for proto in protocols:
        t0 = time.perf_counter()
        base = _scenario(args, protocol=proto)
        traces = _many(lambda s, b=base: replace(b, seed=s), args.seeds, args.jobs)
        rep = report(traces, out_dir=args.out_dir, stem=proto.lower())
        _summary(proto, rep, time.perf_counter() - t0)
        ok &= rep.passed
        reports.append(rep)
    a, b = reports
    shared = sorted({x["bucket"] for x in a.buckets} & {x["bucket"] for x in b.buckets})
    print("bucket  " + "  ".join(f"{p:>12}" for p in protocols))
    for k in shared:
        print(f"{k:>6}  {a.ratio(k):12.3f}  {b.ratio(k):12.3f}")
    return 0 if ok else 1


def cmd_check(args) -> int:
    trace = RunTrace.read(args.trace)
    res = run_checkers(trace)
    bad = 0
    for name, errs in sorted(res.items()):
        print(f"{name}: {'ok' if not errs else f'{len(errs)} violation(s)'}")
        for e in errs[:10]:
            print("  " + e)
        bad += len(errs)
    return 0 if bad == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairdag", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, seeds: bool):
        sp.add_argument("--scenario", help="scenario JSON file (defaults used when omitted)")
        sp.add_argument("--out-dir", default=".", help="where CSV/JSON reports go")
        if seeds:
            sp.add_argument("--seeds", type=parse_seeds, required=True, help='e.g. "1-50" or "1,4,9"')
            sp.add_argument("--jobs", type=int, default=1, help="parallel runs (joblib)")
        else:
            sp.add_argument("--seed", type=int)

    sp = sub.add_parser("run", help="run one scenario and write trace + report")
    common(sp, seeds=False)
    sp.add_argument("--protocol", choices=["AB", "RL", "POMPE_LITE", "THEMIS_LITE"])
    sp.add_argument("--trace-out")
    sp.add_argument("--dag-out")
    sp.add_argument("--graphs-out")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run one scenario over a seed range")
    common(sp, seeds=True)
    sp.add_argument("--protocol", choices=["AB", "RL", "POMPE_LITE", "THEMIS_LITE"])
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="two protocols on the same seeds")
    common(sp, seeds=True)
    sp.add_argument("--protocol", dest="protocols", action="append",
                    choices=["AB", "RL", "POMPE_LITE", "THEMIS_LITE"],
                    help="give twice, e.g. --protocol AB --protocol POMPE_LITE")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("check", help="re-run the checkers on a saved trace")
    sp.add_argument("trace")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.cmd == "compare":
        args.protocol = None
    try:
        return args.func(args)
    except FairDagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
