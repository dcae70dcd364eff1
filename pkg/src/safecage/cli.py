"""Headless entry point: run scenarios, replay logs, serve, check.

Exit code 0 means every check in the emitted report passed.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
import time
from pathlib import Path

from . import recording
from .sim.scenario import Scenario, SimRunner, load_scenario, resolve_scenario

KMH = 1 / 3.6


def _match(record: dict, matcher: dict) -> bool:
    return all(record.get(k) == v for k, v in matcher.items())


def _subsequence_found(events: list[dict], matchers: list[dict]) -> bool:
    it = iter(events)
    for m in matchers:
        if not any(_match(rec, m) for rec in it):
            return False
    return True


def evaluate_checks(scenario: Scenario, events: list[dict]) -> list[dict]:
    """Turn the scenario's declared checks into pass/fail verdicts."""
    checks = scenario.checks
    results: list[dict] = []

    def add(name: str, ok: bool, detail: str = "") -> None:
        results.append({"name": name, "pass": bool(ok), "detail": detail})

    end = next((e for e in reversed(events) if e["type"] == "end"), {})
    stops = end.get("emergency_stops", 0)
    gaps = [e["gap"] for e in events if e["type"] == "standstill"]

    if "max_emergency_stops" in checks:
        add("max_emergency_stops", stops <= checks["max_emergency_stops"],
            f"observed {stops}, limit {checks['max_emergency_stops']}")
    if "min_emergency_stops" in checks:
        add("min_emergency_stops", stops >= checks["min_emergency_stops"],
            f"observed {stops}")
    if checks.get("require_standstill"):
        add("require_standstill", len(gaps) > 0, f"standstills: {len(gaps)}")
    if "min_standstill_gap" in checks:
        ok = bool(gaps) and min(gaps) >= checks["min_standstill_gap"]
        add("min_standstill_gap", ok,
            f"gaps {gaps}, required >= {checks['min_standstill_gap']}")
    if "expect_mission" in checks:
        add("expect_mission", end.get("mission") == checks["expect_mission"],
            f"final mission {end.get('mission')}")
    if "min_laps" in checks:
        add("min_laps", end.get("laps", 0) >= checks["min_laps"],
            f"laps {end.get('laps', 0)}")
    if "expect_subsequence" in checks:
        add("expect_subsequence",
            _subsequence_found(events, checks["expect_subsequence"]),
            "ordered event subsequence")
    return results


def run_report(scenario: Scenario, seed: int, events: list[dict]) -> dict:
    end = next((e for e in reversed(events) if e["type"] == "end"), {})
    checks = evaluate_checks(scenario, events)
    return {
        "scenario": scenario.id,
        "seed": seed,
        "emergency_stops": end.get("emergency_stops", 0),
        "stop_gaps_m": [e["gap"] for e in events if e["type"] == "standstill"],
        "final_mission": end.get("mission"),
        "laps": end.get("laps", 0),
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def _print_report(report: dict, fmt: str) -> None:
    if fmt == "machine":
        print(json.dumps(report, sort_keys=True))
        return
    print(f"scenario {report['scenario']} (seed {report['seed']}): "
          f"stops={report['emergency_stops']} gaps={report['stop_gaps_m']} "
          f"mission={report['final_mission']}")
    for c in report["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"  [{status}] {c['name']}: {c['detail']}")


def cmd_run(args) -> int:
    scenario = load_scenario(resolve_scenario(args.scenario))
    if args.speed is not None:
        scenario.target_speed = args.speed * KMH
    if args.noise is not None:
        from .sim.scenario import _parse_noise
        scenario.noise = _parse_noise(args.noise)
    runner = SimRunner(scenario, seed=args.seed, record_path=args.record)
    events = runner.run(args.duration)
    if args.events:
        with open(args.events, "w") as fh:
            for rec in events:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    report = run_report(scenario, args.seed, events)
    _print_report(report, args.format)
    return 0 if report["pass"] else 1


def cmd_replay(args) -> int:
    try:
        result = recording.replay(args.log)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.format == "machine":
        print(json.dumps(result, sort_keys=True))
    elif result["ok"]:
        print(f"replay OK: {result['ticks_checked']} ticks match")
    else:
        div = result["first_divergence"]
        print(f"replay FAILED at tick {div['tick']}")
        print(f"  recorded:   {json.dumps(div['recorded'], sort_keys=True)}")
        print(f"  recomputed: {json.dumps(div['recomputed'], sort_keys=True)}")
    return 0 if result["ok"] else 1


def _check_suite(quick: bool) -> list[tuple[str, dict]]:
    suite: list[tuple[str, dict]] = []
    for kmh in (5, 10, 15, 20):
        suite.append((f"stop-distance@{kmh}km/h",
                      {"scenario": "stop-distance", "speed": kmh, "seed": 1}))
    seeds = (1,) if quick else tuple(range(10))
    for seed in seeds:
        suite.append((f"nominal-lap seed={seed}",
                      {"scenario": "nominal-lap", "seed": seed}))
    for sid in ("s1", "s5", "s7", "s8"):
        suite.append((sid, {"scenario": sid, "seed": 0}))
    return suite


def cmd_check(args) -> int:
    failures = 0
    for name, spec in _check_suite(args.quick):
        scenario = load_scenario(resolve_scenario(spec["scenario"]))
        if "speed" in spec:
            scenario.target_speed = spec["speed"] * KMH
        t0 = time.monotonic()
        events = SimRunner(scenario, seed=spec.get("seed", 0)).run()
        report = run_report(scenario, spec.get("seed", 0), events)
        wall = time.monotonic() - t0
        status = "PASS" if report["pass"] else "FAIL"
        if not report["pass"]:
            failures += 1
        print(f"[{status}] {name} ({wall:.1f}s) gaps={report['stop_gaps_m']} "
              f"stops={report['emergency_stops']} mission={report['final_mission']}")
    print("check:", "PASS" if failures == 0 else f"FAIL ({failures})")
    return 0 if failures == 0 else 1


def cmd_serve(args) -> int:
    from .ccc.registry import FleetRegistry
    from .ccc.service import CccService, serve_tcp
    from .ccc.vehicle_link import run_vehicle_link

    host, _, port = args.listen.rpartition(":")
    port = int(port)
    scenario = load_scenario(resolve_scenario(args.scenario))
    runner = SimRunner(scenario, seed=args.seed)

    registry = FleetRegistry()
    vehicle_id = args.vehicle_id
    registry.add_vehicle(vehicle_id, [
        {"id": d.id, "name": d.name, "x": d.x, "y": d.y}
        for d in runner.world.destinations])
    service = CccService(registry, audit_path=args.log)

    async def main():
        server = await serve_tcp(service, host or "127.0.0.1", port)
        print(f"hub listening on {host or '127.0.0.1'}:{port}")
        tasks = [asyncio.ensure_future(
            run_vehicle_link(runner, vehicle_id, host or "127.0.0.1", port))]
        if args.http:
            import uvicorn
            from .ccc.web import build_app
            app = build_app(service, static_dir=args.ui)
            config = uvicorn.Config(app, host=host or "127.0.0.1",
                                    port=args.http, log_level="warning")
            tasks.append(asyncio.ensure_future(uvicorn.Server(config).serve()))
            print(f"operator console on http://{host or '127.0.0.1'}:{args.http}")
        async with server:
            await asyncio.gather(*tasks)

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safecage",
        description="runtime safety cage: simulator, monitor, and supervision hub")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless")
    p_run.add_argument("--scenario", required=True, help="built-in id or YAML path")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--duration", type=float, default=None, help="seconds")
    p_run.add_argument("--speed", type=float, default=None, help="km/h override")
    p_run.add_argument("--noise", default=None, choices=["off", "default", "ghost"])
    p_run.add_argument("--record", default=None, help="write a tick recording")
    p_run.add_argument("--events", default=None, help="write the event log (NDJSON)")
    p_run.add_argument("--headless", action="store_true", help="accepted; always true")
    p_run.add_argument("--format", default="text", choices=["text", "machine"])
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="re-derive verdicts from a recording")
    p_replay.add_argument("log", help="recording path")
    p_replay.add_argument("--format", default="text", choices=["text", "machine"])
    p_replay.set_defaults(func=cmd_replay)

    p_check = sub.add_parser("check", help="run the scenario acceptance battery")
    p_check.add_argument("--quick", action="store_true", help="fewer lap seeds")
    p_check.set_defaults(func=cmd_check)

    p_serve = sub.add_parser("serve", help="launch the hub plus a simulated vehicle")
    p_serve.add_argument("--listen", default="127.0.0.1:8700", help="host:port")
    p_serve.add_argument("--http", type=int, default=8701,
                         help="operator console port (0 disables)")
    p_serve.add_argument("--ui", default=None, help="static UI bundle directory")
    p_serve.add_argument("--scenario", default="supervised")
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.add_argument("--vehicle-id", default="van-1")
    p_serve.add_argument("--log", default=None, help="audit log path")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
