#!/usr/bin/env python3
"""Run every bundled singularity experiment and print the verdicts.

Each config in configs/ describing a full experiment is executed through
the command line front end into results/<label>/, so a finished run
leaves the same artifacts a by-hand invocation would.
"""

import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

EXPERIMENTS = [
    "pq_main.json",
    "pq_same_orbit.json",
    "pl_generic.json",
    "pl_herman.json",
    "rotation_baseline.json",
]


def main() -> int:
    import json

    failures = 0
    for name in EXPERIMENTS:
        config = os.path.join(ROOT, "configs", name)
        label = json.load(open(config))["label"]
        outdir = os.path.join(ROOT, "results", label)
        cmd = [
            sys.executable,
            "-m",
            "circlebreak.cli",
            "singularity",
            "--config",
            config,
            "--out",
            outdir,
        ]
        print(f"== {label}")
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            failures += 1
            print(f"   exit {proc.returncode}: {proc.stderr.strip()}")
            continue
        report = json.load(open(os.path.join(outdir, "report.json")))
        print(
            f"   verdict {report['verdict']}  "
            f"min_upper_gap {report['min_upper_gap']:.3e}  "
            f"median_gap {report['median_gap']:.3e}"
        )
        lorenz = [row["lorenz_90_length"] for row in report["rows"]]
        print("   lorenz_90_length " + " ".join(f"{v:.5f}" for v in lorenz))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
