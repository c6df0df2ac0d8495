"""Sweep the ablation configurations over the hard suite and print the
success-rate table plus the full-vs-ablated comparison.

Usage: python3 demos/ablation_sweep.py [episodes]
"""

import sys

from groundling.backends.stubs import stub_suite
from groundling.bench import (
    AblationConfig, compare_reports, render_comparison, render_report,
    run_bench,
)

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 20

configs = {
    "full": AblationConfig(),
    "no_mask": AblationConfig(mask=False),
    "no_web": AblationConfig(web=False),
    "no_replace": AblationConfig(replace=False),
    "all_removed": AblationConfig(mask=False, replace=False, web=False),
}

reports = {}
for name, ablation in configs.items():
    report, _, _ = run_bench("hard", episodes, ablation, seed=0,
                             suite=stub_suite())
    reports[name] = report

print(f"{'config':<14} {'avg SR':>8}")
for name, report in reports.items():
    print(f"{name:<14} {report['average_sr']:>7.1f}%")

print("\nfull configuration:")
print(render_report(reports["full"]))

print("\nfull vs all_removed:")
print(render_comparison(compare_reports(reports["full"],
                                        reports["all_removed"])))
