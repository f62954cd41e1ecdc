"""Command-line front end: ``multislice-lab {compute,verify,sweep}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import bounds
from .constants import (
    COMPARISON_SITE_CAP,
    Budget,
    build_generator,
    comparison_constant,
    lsc_estimate,
    mlsc_estimate,
    poincare_constant,
)
from .core import (
    DEFAULT_STATE_CAP,
    ColorProfile,
    StateSpace,
    graph_by_name,
    multinomial_size,
    partitions,
)
from .errors import CapExceededError, MultisliceError
from .exclusion import exclusion_generator, mixing_time, tv_decay_exact
from .isoperimetry import IOTA_STATE_CAP, brute_force_iota, candidate_bound
from .verify import CHECKS, run_checks

SCHEMA = "1"
EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 1, 2, 3
QUANTITIES = ("poincare", "lsc", "mlsc", "iota", "comparison", "bounds", "mixing")

log = logging.getLogger("multislice_lab")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    profiles: list[ColorProfile] = field(default_factory=list)
    graph: str = "mean_field"
    quantities: tuple[str, ...] = ()
    seed: int = 0
    restarts: int = 64
    max_iter: int = 5000
    cap_states: int = DEFAULT_STATE_CAP
    workers: int | None = None
    out: str | None = None
    fmt: str = "json"
    only: tuple[str, ...] = ()
    witness_out: str | None = None
    curve_out: str | None = None

    def budget(self) -> Budget:
        return Budget(random_restarts=self.restarts, max_iter=self.max_iter,
                      seed=self.seed, workers=self.workers)


def compute_report(cfg: RunConfig) -> dict:
    prof = cfg.profiles[0]
    graph = graph_by_name(cfg.graph, prof.n)
    results: dict = {}
    want = set(cfg.quantities)
    op = None

    def generator():
        nonlocal op
        if op is None:
            op = build_generator(prof, graph, cap=cfg.cap_states)
        return op

    if "poincare" in want:
        est = poincare_constant(generator(), seed=cfg.seed)
        results["poincare"] = est.to_record()
    if "lsc" in want:
        est = lsc_estimate(generator(), budget=cfg.budget())
        results["lsc"] = est.to_record()
        if cfg.witness_out:
            est.witness.to_csv(cfg.witness_out)
    if "mlsc" in want:
        results["mlsc"] = mlsc_estimate(generator(), budget=cfg.budget()).to_record()
    c_g = tau_g = None
    if "comparison" in want:
        c_g = comparison_constant(graph, site_cap=COMPARISON_SITE_CAP)
        tau_g = poincare_constant(exclusion_generator((1, prof.n - 1), graph)).value
        results["comparison"] = {"quantity": "c(G)", "value": c_g, "kind": "exact_spectral",
                                 "tau_rel_graph": tau_g}
    if "iota" in want:
        sharp, loose = candidate_bound(prof)
        rec = {"candidate_upper": sharp, "candidate_upper_loose": loose,
               "candidate_kind": "closed_form"}
        space = StateSpace(prof, cap=cfg.cap_states)
        iota, mask = brute_force_iota(space, cap=IOTA_STATE_CAP)
        rec.update({"value": iota, "kind": "exact_enumeration", "argmin_mask": mask.to_hex(),
                    "argmin_size": mask.popcount})
        results["iota"] = rec
    if "bounds" in want:
        results["bounds"] = bounds.bounds_report(prof, c_g, tau_g).to_dict()
        _, trace = bounds.recursive_upper(prof)
        results["bounds"]["recursion"] = trace.to_dict()
    if "mixing" in want:
        curve = tv_decay_exact(generator(), "worst" if generator().dimension <= 5000 else 0)
        rec = {"policy": curve.policy, "kind": "exact_uniformization", "points": len(curve.times),
               "tv0": float(curve.tv[0])}
        try:
            rec["t_mix_quarter"] = mixing_time(curve, 0.25)
        except MultisliceError as exc:
            rec["t_mix_quarter"] = None
            rec["note"] = str(exc)
        if cfg.curve_out:
            curve.to_csv(cfg.curve_out)
        results["mixing"] = rec
    return {
        "schema": SCHEMA, "command": "compute", "profile": list(prof.counts),
        "n": prof.n, "graph": graph.label, "seed": cfg.seed, "results": results,
    }


def _flat_rows(report: dict):
    for section, rec in report["results"].items():
        if section == "bounds":
            for name, iv in rec["intervals"].items():
                yield {"section": "bounds", "quantity": name, "lower": iv["lower"],
                       "upper": iv["upper"], "value": None, "kind": iv["kind"]}
            continue
        yield {"section": section, "quantity": rec.get("quantity", section), "lower": None,
               "upper": None, "value": rec.get("value", rec.get("t_mix_quarter")),
               "kind": rec.get("kind")}


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(rows, header) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in header})
    return buf.getvalue()


def cmd_compute(cfg: RunConfig) -> int:
    report = compute_report(cfg)
    if cfg.fmt == "json":
        _write(json.dumps(report, indent=2, sort_keys=True) + "\n", cfg.out)
    else:
        rows = list(_flat_rows(report))
        _write(_csv_text(rows, ["section", "quantity", "lower", "upper", "value", "kind"]), cfg.out)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    profiles = [p.counts for p in cfg.profiles] or None
    results = run_checks(cfg.only or None, echo=lambda s: print(s, flush=True), profiles=profiles)
    failed = [r.name for r in results if not r.passed]
    print(f"\n{'check':<14} {'status':<6} {'seconds':>8}")
    for r in results:
        print(f"{r.name:<14} {'PASS' if r.passed else 'FAIL':<6} {r.seconds:>8.2f}")
    summary = {"schema": SCHEMA, "command": "verify", "passed": not failed,
               "checks": [r.to_dict() for r in results]}
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(summary, indent=2) + "\n")
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    print(f"all {len(results)} checks passed")
    return 0


SWEEP_HEADER = ["profile", "n", "L", "states", "main_lower", "main_upper", "fow", "recursive",
                "trivial_chain", "iota_lower", "iota_upper", "iota_candidate", "iota",
                "tau_rel", "lsc", "lsc_kind", "in_main_interval", "status"]


def sweep_rows(cfg: RunConfig, n_max: int, l_max: int, n_min: int = 2, with_lsc: bool = True):
    for n in range(n_min, n_max + 1):
        for parts in partitions(n):
            if not 2 <= len(parts) <= l_max:
                continue
            prof = ColorProfile(parts)
            lo, up = bounds.bound_main(prof)
            il, iu = bounds.bound_iota(prof)
            row = {
                "profile": str(prof), "n": n, "L": prof.l, "states": multinomial_size(prof),
                "main_lower": lo, "main_upper": up, "fow": bounds.bound_fow(prof),
                "recursive": bounds.recursive_upper(prof)[0],
                "trivial_chain": bounds.bound_trivial_chain(prof),
                "iota_lower": il, "iota_upper": iu, "iota_candidate": candidate_bound(prof)[0],
            }
            status = []
            try:
                op = build_generator(prof, cap=cfg.cap_states)
                row["tau_rel"] = poincare_constant(op, seed=cfg.seed).value
                if with_lsc:
                    est = lsc_estimate(op, budget=cfg.budget())
                    row["lsc"], row["lsc_kind"] = est.value, est.kind
                    row["in_main_interval"] = lo - 1e-6 <= est.value <= up + 1e-9
                if row["states"] <= IOTA_STATE_CAP:
                    row["iota"] = brute_force_iota(op.space)[0]
            except CapExceededError as exc:
                status.append(f"cap:{exc.cap_name}")
            row["status"] = ";".join(status) or "ok"
            yield row


def cmd_sweep(cfg: RunConfig, n_max: int, l_max: int, n_min: int, with_lsc: bool) -> int:
    rows = sweep_rows(cfg, n_max, l_max, n_min, with_lsc)
    if cfg.fmt == "json":
        data = {"schema": SCHEMA, "command": "sweep", "rows": list(rows)}
        _write(json.dumps(data, indent=2, sort_keys=True) + "\n", cfg.out)
    else:
        _write(_csv_text(rows, SWEEP_HEADER), cfg.out)
    return 0


def _profile_arg(text):
    try:
        return ColorProfile.parse(text)
    except MultisliceError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multislice-lab",
                                description="Functional-inequality constants of the multislice.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--budget-restarts", type=int, default=64, dest="restarts")
        sp.add_argument("--max-iter", type=int, default=5000)
        sp.add_argument("--cap-states", type=int, default=DEFAULT_STATE_CAP)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default=fmt_default, dest="fmt")

    c = sub.add_parser("compute", help="constants and bounds for one profile")
    c.add_argument("--profile", type=_profile_arg, required=True)
    c.add_argument("--graph", default="mean_field", help="built-in name or @edge-list-file")
    for q in QUANTITIES:
        c.add_argument(f"--{q}", action="store_true")
    c.add_argument("--all", action="store_true", help="every quantity")
    c.add_argument("--witness-out", default=None, help="CSV for the lsc witness")
    c.add_argument("--curve-out", default=None, help="CSV for the mixing curve")
    common(c)

    v = sub.add_parser("verify", help="run the built-in verification suite")
    v.add_argument("--only", default="", help="comma-separated checks: " + ",".join(CHECKS))
    v.add_argument("--out", default=None)
    v.add_argument("--profile", type=_profile_arg, default=None,
                   help="restrict the per-profile checks to one profile")

    s = sub.add_parser("sweep", help="one row per profile of a family")
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--l-max", type=int, default=None)
    s.add_argument("--no-lsc", action="store_true")
    common(s, fmt_default="csv")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for attr in ("seed", "restarts", "max_iter", "cap_states", "workers", "out", "fmt"):
        if hasattr(args, attr):
            setattr(cfg, attr, getattr(args, attr))
    if args.command == "compute":
        cfg.profiles = [args.profile]
        cfg.graph = args.graph
        cfg.quantities = QUANTITIES if args.all else tuple(q for q in QUANTITIES if getattr(args, q))
        if not cfg.quantities:
            raise ConfigError("nothing to compute: pass --all or at least one of "
                              + ", ".join("--" + q for q in QUANTITIES))
        cfg.witness_out, cfg.curve_out = args.witness_out, args.curve_out
    if args.command == "verify":
        if args.profile is not None:
            if args.profile.l < 2:
                raise ConfigError(f"profile ({args.profile}) has a single color")
            cfg.profiles = [args.profile]
        cfg.only = tuple(x.strip() for x in args.only.split(",") if x.strip())
        unknown = [x for x in cfg.only if x not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; available: {', '.join(CHECKS)}")
    if cfg.restarts < 0 or cfg.max_iter < 1 or cfg.cap_states < 1:
        raise ConfigError("budget and cap values must be positive")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if cfg.command == "compute":
            return cmd_compute(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        return cmd_sweep(cfg, args.n_max, args.l_max or args.n_max, args.n_min, not args.no_lsc)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, MultisliceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
