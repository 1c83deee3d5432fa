"""Command-line entry points: serve, scenario, gen-d4, verify-audit."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .audit import AuditError, AuditLog, ChainOk


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="telecare",
        description="Privacy-preserving tele-monitoring backend tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="path to the JSON service config")

    scenario = sub.add_parser("scenario", help="run a seeded end-to-end simulation")
    scenario.add_argument("--plan", help="JSON file overriding the default plan")
    scenario.add_argument("--seed", type=int, default=0)
    scenario.add_argument("--out", default="scenario-out", help="output directory")

    gen = sub.add_parser("gen-d4", help="generate one month of location data")
    gen.add_argument("--profile", required=True,
                     choices=("stable", "place_shift", "slow_routes", "wanderer"))
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--days", type=int, default=30)
    gen.add_argument("--out", default="d4-out", help="output directory")

    verify = sub.add_parser("verify-audit", help="check an audit log's hash chain")
    verify.add_argument("--log", required=True, help="path to the audit log")
    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ConfigError, ServiceState, build_app, load_config

    try:
        config = load_config(args.config)
        state = ServiceState(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(build_app(state), host=config.host, port=config.port, log_level="info")
    return 0


def _cmd_scenario(args: argparse.Namespace) -> int:
    from .scenario import FaultPlan, ScenarioPlan, default_fault_plan, run_scenario

    overrides: dict = {}
    if args.plan:
        with open(args.plan, encoding="utf-8") as fh:
            overrides = json.load(fh)
    plan = ScenarioPlan(
        group_a=int(overrides.get("group_a", 15)),
        group_b=int(overrides.get("group_b", 15)),
        days=int(overrides.get("days", 90)),
        interventions=int(overrides.get("interventions", 2)),
        anonymize=bool(overrides.get("anonymize", False)),
    )
    if "fault_seed" in overrides:
        plan = ScenarioPlan(
            group_a=plan.group_a,
            group_b=plan.group_b,
            days=plan.days,
            interventions=plan.interventions,
            anonymize=plan.anonymize,
            fault_plan=default_fault_plan(
                plan.subject_count, plan.days, int(overrides["fault_seed"])
            ),
        )
    try:
        outcome = run_scenario(plan, args.seed, args.out)
    except Exception as exc:  # any invariant violation must exit nonzero
        print(f"scenario aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    closed = outcome.metrics["tickets"]["closed"]
    total = outcome.metrics["tickets"]["installation"] + outcome.metrics["tickets"]["intervention"]
    print(f"subjects enrolled: {plan.subject_count}")
    print(f"tickets closed: {closed}/{total}")
    print(f"batches delivered: {outcome.metrics['sync']['batches_delivered']} "
          f"(duplicates dropped: {outcome.metrics['sync']['duplicates']}, "
          f"failed sends: {outcome.metrics['sync']['failed_sends']})")
    print(f"reports stored: {outcome.metrics['reports']}")
    print(f"trace messages: {len(outcome.trace)}")
    print(f"trace hash: {outcome.trace_hash}")
    print(f"runtime: {outcome.runtime_s:.2f}s")
    print(f"artifacts: {os.path.join(args.out, 'trace.json')}, "
          f"{os.path.join(args.out, 'metrics.json')}, "
          f"{os.path.join(args.out, 'audit.log')}")
    return 0


def _cmd_gen_d4(args: argparse.Namespace) -> int:
    from .generators import generate_d4

    payload, labels = generate_d4(args.seed, args.profile, days=args.days)
    os.makedirs(args.out, exist_ok=True)
    stem = f"{args.profile}-{args.seed}"
    data_path = os.path.join(args.out, f"{stem}.json")
    labels_path = os.path.join(args.out, f"{stem}.labels.json")
    with open(data_path, "wb") as fh:
        fh.write(payload)
    with open(labels_path, "w", encoding="utf-8") as fh:
        json.dump(labels, fh, indent=2, sort_keys=True)
    print(data_path)
    print(labels_path)
    return 0


def _cmd_verify_audit(args: argparse.Namespace) -> int:
    if not os.path.exists(args.log):
        print(f"no such log: {args.log}", file=sys.stderr)
        return 2
    try:
        status = AuditLog(args.log).verify_chain()
    except AuditError as exc:
        print(f"TAMPERED: {exc}", file=sys.stderr)
        return 1
    if isinstance(status, ChainOk):
        print(f"ok: {status.length} records, chain intact")
        return 0
    print(f"TAMPERED: first bad record at index {status.index}")
    return 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "scenario": _cmd_scenario,
        "gen-d4": _cmd_gen_d4,
        "verify-audit": _cmd_verify_audit,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
