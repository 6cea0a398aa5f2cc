#!/usr/bin/env python3
"""Run the industry interoperability demo and print the causal-chain log."""
from __future__ import annotations

import argparse
import logging

from artifact.bench import Scenario, ScenarioConfig, run_industry_demo


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--writes", type=int, default=5)
    parser.add_argument("--fault-after", type=int, default=None,
                        help="drop the robot connection after this write")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    cfg = ScenarioConfig(scenario=Scenario.INDUSTRY, duration_s=1.0)
    demo_log = run_industry_demo(cfg, writes=args.writes, fault_after_write=args.fault_after)
    for event in demo_log.events():
        print(event)
    ok = (
        demo_log.count("sensor_pub") == args.writes
        and demo_log.count("robot_at") == args.writes
    )
    print(f"chain complete: {ok}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
