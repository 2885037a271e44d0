"""Command-line front end.

    dynamic-nem thresholds community.json tariff.json
    dynamic-nem price community.json tariff.json --generation 1.5
    dynamic-nem audit outcome.json benchmark.json
    dynamic-nem synth --out data.csv --prices prices.csv
    dynamic-nem simulate data.csv config.json --netting 15m --out reports/

JSON goes to stdout as one line; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import audit
from .io import SchemaError, dump_json, load_benchmarks, load_community, load_outcome, load_tariff, read_json
from .pricing import community_price, compute_thresholds
from .welfare import benchmark_outcomes, decentralized_outcome

log = logging.getLogger("dynamic_nem.cli")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass
class CliConfig:
    subcommand: str
    inputs: list[Path] = field(default_factory=list)
    output: Path | None = None
    tol: float | None = None
    seed: int | None = None

    def check_inputs(self):
        for p in self.inputs:
            if not p.is_file():
                raise FileNotFoundError(f"{p}: no such file")


class CliError(Exception):
    pass


# ------------------------------------------------------------------ commands


def cmd_thresholds(args) -> int:
    CliConfig("thresholds", [Path(args.community), Path(args.tariff)]).check_inputs()
    c, t = load_community(args.community), load_tariff(args.tariff)
    th = compute_thresholds(c, t)
    print(dump_json({"d_plus": th.d_plus, "d_minus": th.d_minus}))
    return EXIT_OK


def cmd_price(args) -> int:
    CliConfig("price", [Path(args.community), Path(args.tariff)], tol=args.tol).check_inputs()
    if args.generation is not None and args.generation < 0:
        raise CliError(f"--generation must be >= 0, got {args.generation}")
    c, t = load_community(args.community), load_tariff(args.tariff)
    g = c.generation if args.generation is None else args.generation
    if args.generation is not None and abs(g - c.generation) > 1e-12 * max(1.0, g):
        # spread the requested generation over members in proportion to their own (equally if none)
        c = _with_total_generation(c, g)
    price = community_price(c, g, t, args.tol)
    print(dump_json(price.to_dict()))
    if args.outcome_out:
        dump_json(decentralized_outcome(c, g, t, args.tol).to_dict(), args.outcome_out)
    if args.benchmark_out:
        dump_json({"members": [m.to_dict() for m in benchmark_outcomes(c, t, args.tol)]}, args.benchmark_out)
    return EXIT_OK


def _with_total_generation(c, g):
    from .core import Community

    gen = np.array([m.generation for m in c.members], dtype=float)
    share = gen / gen.sum() if gen.sum() > 0 else np.full(len(gen), 1.0 / len(gen))
    return Community(tuple(m.with_generation(float(g * s)) for m, s in zip(c.members, share)))


def cmd_audit(args) -> int:
    CliConfig("audit", [Path(args.outcome), Path(args.benchmark)], tol=args.tol).check_inputs()
    outcome, bench = load_outcome(args.outcome), load_benchmarks(args.benchmark)
    ids = [m.member_id for m in outcome.members]
    if sorted(map(str, ids)) != sorted(str(b.member_id) for b in bench):
        raise CliError("outcome and benchmark member ids do not match")
    verdict = audit(outcome, bench, 1e-9 if args.tol is None else args.tol)
    print(dump_json(verdict.to_list()))
    if not verdict.passed:
        log.error("failed: %s", ", ".join(a.value for a in verdict.failed))
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_synth(args) -> int:
    from .sim.data import write_timeseries
    from .sim.synth import SyntheticConfig, generate_export_prices, generate_synthetic_scenario

    cfg = {}
    if args.config:
        CliConfig("synth", [Path(args.config)]).check_inputs()
        cfg = read_json(args.config)
        cfg = cfg.get("synthetic", cfg)
    for key in ("households", "adopters", "months", "resolution_minutes"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    scfg = SyntheticConfig.from_dict(cfg)
    seed = 0 if args.seed is None else args.seed
    records = generate_synthetic_scenario(scfg, seed)
    written = []
    try:
        write_timeseries(records, args.out)
        written.append(Path(args.out))
        if args.prices:
            generate_export_prices(scfg, seed).to_csv(args.prices)
            written.append(Path(args.prices))
        if args.config_out:
            out = Path(args.config_out)
            export = 0.0
            if args.prices:
                # relative to the config file, which is how simulate resolves it
                export = os.path.relpath(Path(args.prices).resolve(), out.resolve().parent)
            doc = {"tou": {"peak_rate": 0.40, "offpeak_rate": 0.20, "peak_hours": [16, 17, 18, 19, 20]},
                   "export_rate": export, "fixed": 0.0, "netting_minutes": 15,
                   "calibration": {"b_policy": "elasticity", "kappa": 2.0}, "seed": seed}
            dump_json(doc, out)
            written.append(out)
    except BaseException:
        _remove(written)
        raise
    n_members = len({r.member_id for r in records})
    if not args.quiet:
        print(f"wrote {len(records)} rows for {n_members} members to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .sim.calibrate import CalibrationConfig
    from .sim.data import NettingPeriod, load_timeseries
    from .sim.metrics import RPF_MODES, compute_gains, write_monthly_csv, write_outcomes_csv, write_rpf_csv
    from .sim.scenario import run_scenario
    from .sim.tariff import TouSchedule

    CliConfig("simulate", [Path(args.data), Path(args.config)], Path(args.out), args.tol, args.seed).check_inputs()
    cfg = read_json(args.config)
    schedule = TouSchedule.from_config(cfg, Path(args.config).parent)
    netting = NettingPeriod.parse(args.netting or cfg.get("netting_minutes", 15))
    cal = CalibrationConfig.from_dict(cfg.get("calibration"))
    records = load_timeseries(args.data)
    if not records:
        raise CliError(f"{args.data}: no data rows")

    result = run_scenario(records, schedule, netting, cal, args.tol, workers=args.workers)
    reports = compute_gains(result)
    profit = result.operator_profit()
    failures = [] if args.no_audit else result.audit(args.tol)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"monthly": out / "monthly.csv", "rpf": out / "rpf.csv", "summary": out / "summary.json"}
    if args.outcomes:
        paths["outcomes"] = out / "outcomes.csv"
    written = []
    try:
        write_monthly_csv(reports, paths["monthly"])
        written.append(paths["monthly"])
        write_rpf_csv(result, paths["rpf"])
        written.append(paths["rpf"])
        if "outcomes" in paths:
            write_outcomes_csv(result, paths["outcomes"])
            written.append(paths["outcomes"])
        summary = {
            "netting": netting.label,
            "intervals": result.n_intervals,
            "skipped_intervals": len(result.panel.skipped),
            "members": len(result.member_ids),
            "adopters": int(result.panel.adopters.sum()),
            "zone_counts": result.zone_counts(),
            "max_abs_operator_profit": float(np.abs(profit).max()) if profit.size else 0.0,
            "audit": "skipped" if args.no_audit else ("pass" if not failures else "fail"),
            "audit_failures": [
                {"timestamp": ts.isoformat().replace("+00:00", "Z"), "failed": [a.value for a in v.failed]}
                for ts, v in failures
            ],
            "rpf_kwh": {m: sum(r.rpf_kwh[m] for r in reports) for m in RPF_MODES},
            "surplus_gain": {k: sum(r.classes[k].surplus_gain for r in reports) for k in ("all", "adopters", "non_adopters")},
            "tariff": schedule.describe(),
            "calibration": cal.to_dict(),
            "seed": args.seed if args.seed is not None else cfg.get("seed"),
        }
        dump_json(summary, paths["summary"])
        written.append(paths["summary"])
    except BaseException:
        _remove(written)
        raise

    zc = summary["zone_counts"]
    digest = (f"intervals={result.n_intervals} netting={netting.label} "
              f"NetConsuming={zc['NetConsuming']} NetZero={zc['NetZero']} NetProducing={zc['NetProducing']} "
              f"audit={summary['audit']}")
    if failures:
        digest += f" failed_intervals={len(failures)}"
    print(digest)
    return EXIT_FAIL if failures else EXIT_OK


def _remove(paths):
    for p in paths:
        try:
            Path(p).unlink()
        except FileNotFoundError:
            pass


# ------------------------------------------------------------------ parser


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--tol", type=float, default=d, help="tolerance override")
    p.add_argument("--seed", type=int, default=d, help="random seed")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="only print results and errors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynamic-nem", description="Dynamic NEM community pricing tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = add("thresholds", cmd_thresholds, "demand thresholds d_plus and d_minus")
    p.add_argument("community")
    p.add_argument("tariff")

    p = add("price", cmd_price, "announced zone, rate and fixed share")
    p.add_argument("community")
    p.add_argument("tariff")
    p.add_argument("--generation", "-g", type=float, default=None,
                   help="aggregate generation (default: sum of member generation)")
    p.add_argument("--outcome-out", help="also write the decentralized outcome JSON here")
    p.add_argument("--benchmark-out", help="also write the standalone benchmark JSON here")

    p = add("audit", cmd_audit, "check the six cost-causation axioms")
    p.add_argument("outcome")
    p.add_argument("benchmark")

    p = add("simulate", cmd_simulate, "run the time-series experiment")
    p.add_argument("data")
    p.add_argument("config")
    p.add_argument("--netting", default=None, help="netting period, e.g. 15m or 1h (default: config)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--outcomes", action="store_true", help="also write per-member outcomes.csv")
    p.add_argument("--no-audit", action="store_true", help="skip the per-interval axiom audit")
    p.add_argument("--workers", type=int, default=1)

    p = add("synth", cmd_synth, "generate a synthetic load/solar data set")
    p.add_argument("--out", required=True, help="data CSV path")
    p.add_argument("--prices", help="export price CSV path")
    p.add_argument("--config", help="JSON with synthetic settings")
    p.add_argument("--config-out", help="write a matching simulate config here")
    p.add_argument("--households", type=int)
    p.add_argument("--adopters", type=int)
    p.add_argument("--months", type=int)
    p.add_argument("--resolution-minutes", dest="resolution_minutes", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"error: invalid document {e}", file=sys.stderr)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
    except (CliError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
