"""Run the random-instance lemma suites and print a summary table.

Example:

    python3 scripts/run_lemma_suites.py --count 10 --seed 3 --out reports/suites.json
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from kricci.io import append_report
from kricci.suites import SUITES, SuiteConfig, run_suite


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--suite", choices=SUITES, action="append",
                        help="suite to run (repeatable, default: all)")
    parser.add_argument("--count", type=int, default=5,
                        help="instances per (n, k) cell")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, nargs="+", default=[2, 3],
                        help="complex dimensions to cover")
    parser.add_argument("--out", type=Path, default=None,
                        help="append suite reports to this JSON file")
    args = parser.parse_args(argv)

    all_ok = True
    for suite in args.suite or SUITES:
        config = SuiteConfig(suite=suite, n_values=tuple(args.n),
                             count=args.count, seed=args.seed)
        report = run_suite(config)
        status = "ok" if report.ok else "FAIL"
        print(f"{suite:18s} {len(report.cases):3d} cases  "
              f"worst margin {report.worst_margin:+.3e}  "
              f"tol {report.tolerance:.1e}  {report.wall_time:6.2f}s  {status}")
        if not report.ok:
            all_ok = False
            for case in report.cases:
                if not case.passed:
                    print(f"  FAIL {case.case_id} ({case.lemma}) "
                          f"margin {case.margin:+.3e}")
        if args.out is not None:
            append_report(args.out, report.to_dict())
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
