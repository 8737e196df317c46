"""Run the bundled differential-equivalence jobs and print each row.

Shows the three possible verdicts side by side: two wrappers that
agree everywhere, two factorials that agree including their divergent
inputs, and a pair split apart by a concrete witness.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from ftal import harness, registry


def obs_text(obs: dict) -> str:
    if obs["kind"] == "terminated":
        depth = obs.get("stack_depth")
        tail = f" depth={depth}" if depth else ""
        return f"terminated {obs['value']}{tail}"
    if obs["kind"] == "running":
        return f"running after {obs['fuel']}"
    return f"stuck ({obs['reason']})"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fuel", type=int, default=None)
    args = ap.parse_args()

    worst = 0
    for name, _, _ in registry.JOBS:
        job = harness.load_job(registry.job_path(name))
        if args.fuel is not None:
            job = harness.EquivJob(
                left=job.left, right=job.right, type_text=job.type_text,
                inputs=job.inputs, fuel=args.fuel,
                compare_stack=job.compare_stack)
        report = harness.run_job(job)
        print(f"{name}: {report['verdict']}", end="")
        if report.get("witness") is not None:
            print(f" (witness {report['witness']})", end="")
        print()
        for row in report["rows"]:
            mark = "=" if row["agree"] else "!"
            print(f"  {mark} input {row['input']}: "
                  f"{obs_text(row['left'])} | {obs_text(row['right'])}")
        worst = max(worst, report["exit_code"])
    return worst


if __name__ == "__main__":
    sys.exit(main())
