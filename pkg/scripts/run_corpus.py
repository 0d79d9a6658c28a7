#!/usr/bin/env python3
"""Run the seeded instance corpus end to end and print a per-instance table.

Each instance gets a fixed-length 200-step run (trajectory-level audits) and
a run to residual tolerance 1e-10 (convergence audit).  The exit status is 0
only if every auditor passes on every instance.
"""

import argparse
import sys
import time

from graphmann.corpus import acceptance_instances
from graphmann.diagnostics import run_audits
from graphmann.mann import run
from graphmann.normed_space import diameter

TRAJECTORY_AUDITS = (
    "trajectory",
    "edge_propagation",
    "residual_monotone",
    "gk_inequality",
    "fejer",
    "rate",
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=100, help="instances to run")
    parser.add_argument("--seed", type=int, default=None, help="corpus seed override")
    args = parser.parse_args()

    kwargs = {} if args.seed is None else {"seed": args.seed}
    instances = acceptance_instances(args.count, **kwargs)
    started = time.perf_counter()
    flagged = 0
    print(f"{'instance':<44} {'p':>4} {'steps':>6} {'final r':>10}  status")
    for inst in instances:
        audit_traj = run(
            inst.operator, inst.x1, inst.schedule, max_iter=201, tol=0.0, rel=inst.relation
        )
        conv_traj = run(
            inst.operator, inst.x1, inst.schedule, max_iter=100_000, tol=1e-10, rel=inst.relation
        )
        diam = diameter(inst.space, inst.body)
        audits = run_audits(
            TRAJECTORY_AUDITS, audit_traj, inst.operator, inst.relation,
            inst.space, inst.schedule, diam=diam, seed=0,
        )
        audits.update(
            run_audits(
                ("convergence",), conv_traj, inst.operator, inst.relation,
                inst.space, inst.schedule, diam=diam, seed=0,
            )
        )
        worst = [n for n, e in audits.items() if e["status"] != "pass"]
        if worst:
            flagged += 1
        print(
            f"{inst.name:<44} {inst.space.p:>4g} {conv_traj.n_iterates:>6} "
            f"{conv_traj.final_residual:>10.2e}  {'FLAGGED ' + ','.join(worst) if worst else 'pass'}"
        )
    elapsed = time.perf_counter() - started
    print(f"\n{len(instances)} instances in {elapsed:.1f}s, {flagged} flagged")
    return 1 if flagged else 0


if __name__ == "__main__":
    sys.exit(main())
