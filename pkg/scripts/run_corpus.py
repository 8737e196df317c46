"""Check and run every bundled program, printing one row per stage.

Exit status is 0 only when every row passes, so this doubles as a
quick regression gate outside pytest.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from ftal import registry


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fuel", type=int, default=100000)
    args = ap.parse_args()

    rows = registry.run_all(args.fuel)
    ok = 0
    for row in rows:
        mark = "pass" if row["ok"] else "FAIL"
        ok += row["ok"]
        print(f"{mark:4}  {row['stage']:5}  {row['name']:22}  {row['got']}")
    print(f"{'all pass' if ok == len(rows) else 'FAILURES'} "
          f"({ok}/{len(rows)})")
    return 0 if ok == len(rows) else 1


if __name__ == "__main__":
    sys.exit(main())
