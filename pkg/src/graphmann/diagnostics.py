"""Trajectory auditors for the convergence theory of the averaged iteration.

Each auditor mechanically re-checks one proved property along a recorded
run: edge propagation of the iterates, monotone decrease of distances to a
comparable fixed point, monotone decrease of residuals, the Goebel-Kirk
telescoping inequality, the pre-limit rate inequality with its bound
diam / (1 + n a), and fixed-point convergence of the final iterate.

Outcomes are tri-state: pass, fail, or hypothesis-not-met.  A property whose
hypotheses do not apply to the run (no comparable start, no known fixed
point, steps outside (0, 1)) is never conflated with a failed conclusion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._util import as_vector, fmt17, jsonable
from .errors import ConfigError, InputError, UndefinedProductError
from .mann import STOP_TOLERANCE, Schedule, Trajectory, full_iterates, verify_trajectory
from .normed_space import NormSpace
from .operators import Operator, known_fixed_points
from .order_graph import (
    AuditReport,
    ConeRelation,
    STATUS_FAIL,
    STATUS_HYPOTHESIS_NOT_MET,
    STATUS_PASS,
)

INEQUALITY_SLACK_TOL = 1e-9
MONOTONE_TOL = 1e-12
FEJER_FIXED_POINT_TOL = 1e-10
ACCEPT_FIXED_POINT_TOL = 1e-8

DEFAULT_RATE_SPANS = (1, 5, 10, 50)
ALL_AUDITS = (
    "trajectory",
    "edge_propagation",
    "residual_monotone",
    "gk_inequality",
    "fejer",
    "rate",
    "convergence",
)


@dataclass(frozen=True)
class GKRecord:
    """One instance of the telescoping inequality at indices (i, i+n)."""

    i: int
    n: int
    lhs: float
    rhs: float
    slack: float

    def to_dict(self) -> dict:
        return {"i": self.i, "n": self.n, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


@dataclass(frozen=True)
class RateCheck:
    """Pre-limit rate verification for one span n.

    `bound` is diam / (1 + n a); `observed_limit_estimate` is the residual at
    the final recorded iterate.  `trials`/`failures`/`min_slack` summarize
    the sampled-i inequality checks for this span.
    """

    n: int
    a: float
    diam: float
    bound: float
    observed_limit_estimate: float
    trials: int
    failures: int
    min_slack: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "a": self.a,
            "diam": self.diam,
            "bound": self.bound,
            "observed_limit_estimate": self.observed_limit_estimate,
            "trials": self.trials,
            "failures": self.failures,
            "min_slack": self.min_slack,
        }


def _hypothesis_case(traj: Trajectory) -> str | None:
    return traj.start_edge_case()


def audit_edge_propagation(
    traj: Trajectory, operator: Operator, rel: ConeRelation
) -> AuditReport:
    """Check the propagated edges along the whole run.

    With a forward-comparable start this is (x_n, x_{n+1}) and
    (x_{n+1}, T(x_n)) for every step; with a reverse-comparable start both
    families run mirrored.  A start comparable in neither direction yields
    hypothesis-not-met.
    """
    report = AuditReport("edge_propagation")
    x_all = full_iterates(traj, operator)
    tx_all = operator.apply_batch(x_all)
    forward = traj.start_edge_forward
    reverse = traj.start_edge_reverse
    if forward is None or reverse is None:
        forward = rel.contains(x_all[0], tx_all[0])
        reverse = rel.contains(tx_all[0], x_all[0])
    if not (forward or reverse):
        report.hypothesis_met = False
        report.extra["note"] = "start is not comparable with its image"
        return report
    if forward:
        step_diffs = x_all[1:] - x_all[:-1]
        image_diffs = tx_all[:-1] - x_all[1:]
        report.extra["case"] = "forward"
    else:
        step_diffs = x_all[:-1] - x_all[1:]
        image_diffs = x_all[1:] - tx_all[:-1]
        report.extra["case"] = "reverse"
    for diffs, label in ((step_diffs, "step_edge"), (image_diffs, "image_edge")):
        if diffs.shape[0] == 0:
            continue
        ok = rel.diffs_in_cone(diffs)
        report.trials += int(ok.shape[0])
        bad = np.flatnonzero(~ok)
        if bad.size:
            report.failures += int(bad.size)
            if report.witness is None:
                k = int(bad[0])
                report.witness = (np.array(x_all[k]), np.array(x_all[k + 1]))
                report.extra["first_failure"] = {"family": label, "step": k + 1}
    return report


def audit_fejer(
    traj: Trajectory,
    omega,
    operator: Operator,
    rel: ConeRelation,
    space: NormSpace,
) -> AuditReport:
    """Check edge(x_n, omega) for all n and nonincreasing distances to omega.

    Requires omega to be a fixed point (within 1e-10) with edge(x_1, omega);
    otherwise the result is hypothesis-not-met.
    """
    report = AuditReport("fejer_monotone")
    w = as_vector(omega, space.dimension, "omega")
    if space.norm(operator._apply(w) - w) > FEJER_FIXED_POINT_TOL:
        report.hypothesis_met = False
        report.extra["note"] = "omega is not a fixed point"
        return report
    x_all = full_iterates(traj, operator)
    if not rel.contains(x_all[0], w):
        report.hypothesis_met = False
        report.extra["note"] = "edge(x_1, omega) does not hold"
        return report
    member = rel.diffs_in_cone(w - x_all)
    report.trials += int(member.shape[0])
    bad = np.flatnonzero(~member)
    if bad.size:
        report.failures += int(bad.size)
        report.witness = (np.array(x_all[int(bad[0])]), np.array(w))
    dist = space.norms(x_all - w)
    increases = np.flatnonzero(dist[1:] > dist[:-1] + MONOTONE_TOL)
    report.trials += int(dist.shape[0] - 1)
    if increases.size:
        report.failures += int(increases.size)
        if report.witness is None:
            k = int(increases[0])
            report.witness = (np.array(x_all[k]), np.array(x_all[k + 1]))
    report.extra["initial_distance"] = float(dist[0])
    report.extra["limit_estimate"] = float(dist[-1])
    return report


def gk_inequality_check(
    traj: Trajectory, operator: Operator, pairs: list[tuple[int, int]]
) -> list[GKRecord]:
    """Evaluate the telescoping inequality at the requested (i, n) pairs.

    lhs = (1 + sum of t_s over the span) * r_i and
    rhs = ||T(x_{i+n}) - x_i|| + prod of (1 - t_s)^{-1} * (r_i - r_{i+n});
    the slack rhs - lhs is nonnegative (within 1e-9) whenever the run's
    hypotheses hold.  Spans touching a step with t_s = 1 are undefined.
    """
    n_total = traj.n_iterates
    x_all = full_iterates(traj, operator)
    tx_all = operator.apply_batch(x_all)
    space = operator.space
    records = []
    for i, n in pairs:
        if i < 1 or n < 1:
            raise InputError(f"pair indices must satisfy i, n >= 1, got ({i}, {n})")
        if i + n > n_total:
            raise InputError(
                f"pair ({i}, {n}) exceeds the trajectory length {n_total}"
            )
        t_span = traj.schedule_used[i - 1 : i + n - 1]
        one_minus = 1.0 - t_span
        if np.any(one_minus <= 0.0):
            raise UndefinedProductError(
                f"span ({i}, {n}) contains a step with t = 1"
            )
        r_i = float(traj.residuals[i - 1])
        r_in = float(traj.residuals[i + n - 1])
        lhs = (1.0 + float(t_span.sum())) * r_i
        prod = float(np.prod(1.0 / one_minus))
        gap = r_i - r_in
        telescoped = 0.0 if gap == 0.0 else prod * gap
        rhs = space.norm(tx_all[i + n - 1] - x_all[i - 1]) + telescoped
        records.append(GKRecord(i=i, n=n, lhs=lhs, rhs=rhs, slack=rhs - lhs))
    return records


def write_gk_records_csv(records, path) -> None:
    """CSV export of telescoping-inequality records: i, n, lhs, rhs, slack."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "n", "lhs", "rhs", "slack"])
        for record in records:
            row = record.to_dict() if isinstance(record, GKRecord) else record
            writer.writerow(
                [str(row["i"]), str(row["n"])]
                + [fmt17(row[key]) for key in ("lhs", "rhs", "slack")]
            )


def residual_monotone_check(traj: Trajectory) -> AuditReport:
    """Check r_{n+1} <= r_n + 1e-12 for the whole run."""
    report = AuditReport("residual_monotone")
    case = _hypothesis_case(traj)
    if case == "none":
        report.hypothesis_met = False
        report.extra["note"] = "start is not comparable with its image"
        return report
    r = traj.residuals
    increases = np.flatnonzero(r[1:] > r[:-1] + MONOTONE_TOL)
    report.trials = int(r.shape[0] - 1)
    report.failures = int(increases.size)
    if increases.size:
        k = int(increases[0])
        report.witness = (np.array([r[k]]), np.array([r[k + 1]]))
        report.extra["first_failure_step"] = k + 1
    return report


def rate_bound(n: int, a: float, diam: float) -> float:
    """Residual-limit bound diam / (1 + n a)."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not a > 0:
        raise InputError(f"a must be positive, got {a}")
    if diam < 0:
        raise InputError(f"diam must be >= 0, got {diam}")
    return diam / (1.0 + n * a)


def rate_audit(
    traj: Trajectory,
    schedule: Schedule,
    diam: float,
    spans,
    samples_per_span: int = 20,
) -> list[RateCheck]:
    """Verify (1 + n a) r_i <= diam + (1-b)^{-n} (r_i - r_{i+n}) per span.

    For each requested span n the inequality is checked at evenly spaced
    start indices i (at most `samples_per_span` of them), with the
    schedule's declared bounds a, b substituted.  Each returned record also
    carries the bound diam / (1 + n a) next to the final observed residual.
    """
    n_total = traj.n_iterates
    a, b = schedule.a, schedule.b
    checks = []
    for span in spans:
        span = int(span)
        if span < 1:
            raise InputError(f"spans must be >= 1, got {span}")
        if span > n_total - 1:
            raise InputError(
                f"span {span} exceeds the trajectory ({n_total} iterates)"
            )
        i_max = n_total - span
        count = min(samples_per_span, i_max)
        i_values = np.unique(np.linspace(1, i_max, count).round().astype(int))
        trials = failures = 0
        min_slack = np.inf
        scale = (1.0 - b) ** (-span)
        for i in i_values:
            r_i = float(traj.residuals[i - 1])
            r_in = float(traj.residuals[i + span - 1])
            gap = r_i - r_in
            rhs = diam + (0.0 if gap == 0.0 else scale * gap)
            lhs = (1.0 + span * a) * r_i
            slack = rhs - lhs
            trials += 1
            if slack < -INEQUALITY_SLACK_TOL:
                failures += 1
            min_slack = min(min_slack, slack)
        checks.append(
            RateCheck(
                n=span,
                a=a,
                diam=diam,
                bound=rate_bound(span, a, diam),
                observed_limit_estimate=traj.final_residual,
                trials=trials,
                failures=failures,
                min_slack=float(min_slack),
            )
        )
    return checks


def verify_fixed_point(operator: Operator, x, tol: float) -> bool:
    """True iff ||T(x) - x|| <= tol (x must belong to the domain)."""
    xv = as_vector(x, operator.space.dimension, "x")
    return operator.space.norm(operator.evaluate(xv) - xv) <= tol


def convergence_audit(
    traj: Trajectory,
    operator: Operator,
    rel: ConeRelation,
    tol: float = ACCEPT_FIXED_POINT_TOL,
) -> AuditReport:
    """Check that a tolerance-met run ended at a fixed point comparable to x_1.

    The final iterate must satisfy ||T(x) - x|| <= tol, and the limit edge
    edge(x_1, x_final) (mirrored for reverse-comparable starts) must hold.
    Runs that did not stop on tolerance are hypothesis-not-met.
    """
    report = AuditReport("convergence_to_fixed_point")
    if traj.stop_reason != STOP_TOLERANCE:
        report.hypothesis_met = False
        report.extra["note"] = f"run stopped with {traj.stop_reason!r}"
        return report
    final = traj.final_iterate
    report.record(verify_fixed_point(operator, final, tol), final)
    x1 = traj.iterates[0]
    case = _hypothesis_case(traj)
    if case is None:
        tx1 = operator._apply(np.array(x1))
        case = (
            "forward"
            if rel.contains(x1, tx1)
            else ("reverse" if rel.contains(tx1, x1) else "none")
        )
    if case in ("forward", "both"):
        report.record(rel.contains(x1, final), x1, final)
    elif case == "reverse":
        report.record(rel.contains(final, x1), final, x1)
    else:
        report.hypothesis_met = False
        report.extra["note"] = "start is not comparable with its image"
    report.extra["final_residual"] = traj.final_residual
    return report


# --- orchestration ----------------------------------------------------------

def run_audits(
    names,
    traj: Trajectory,
    operator: Operator,
    rel: ConeRelation,
    space: NormSpace,
    schedule: Schedule,
    diam: float,
    seed: int = 0,
    omega=None,
    gk_pairs: int = 50,
    gk_window: int = 200,
    rate_spans=DEFAULT_RATE_SPANS,
    rate_samples: int = 20,
    fixed_point_tol: float = ACCEPT_FIXED_POINT_TOL,
) -> dict[str, dict]:
    """Run the named auditors and collect a JSON-ready report per auditor.

    Each entry is {"property", "status", "trials", "failures", "witness",
    ...} with optional per-record payloads for the inequality audits.
    Hypothesis gating (comparable start, step bounds, known fixed point) is
    applied here so the low-level checks keep their strict contracts.
    """
    results: dict[str, dict] = {}
    case = _hypothesis_case(traj)
    for name in names:
        if name == "trajectory":
            results[name] = verify_trajectory(traj, operator).to_dict()
        elif name == "edge_propagation":
            results[name] = audit_edge_propagation(traj, operator, rel).to_dict()
        elif name == "residual_monotone":
            results[name] = residual_monotone_check(traj).to_dict()
        elif name == "gk_inequality":
            results[name] = _gk_entry(traj, operator, case, seed, gk_pairs, gk_window)
        elif name == "fejer":
            results[name] = _fejer_entry(traj, operator, rel, space, omega)
        elif name == "rate":
            results[name] = _rate_entry(
                traj, schedule, diam, case, rate_spans, rate_samples
            )
        elif name == "convergence":
            results[name] = convergence_audit(
                traj, operator, rel, fixed_point_tol
            ).to_dict()
        else:
            raise ConfigError(f"unknown auditor {name!r}")
    return results


def _not_met(property_name: str, note: str) -> dict:
    return {
        "property": property_name,
        "status": STATUS_HYPOTHESIS_NOT_MET,
        "trials": 0,
        "failures": 0,
        "witness": None,
        "detail": {"note": note},
    }


def _gk_entry(
    traj: Trajectory,
    operator: Operator,
    case: str | None,
    seed: int,
    gk_pairs: int,
    gk_window: int,
) -> dict:
    if case == "none":
        return _not_met("gk_inequality", "start is not comparable with its image")
    if traj.schedule_used.shape[0] and float(traj.schedule_used.max()) >= 1.0:
        return _not_met("gk_inequality", "schedule contains a step with t = 1")
    window = min(traj.n_iterates, gk_window)
    pairs: list[tuple[int, int]] = []
    if window >= 2:
        rng = np.random.default_rng([seed, 17])
        for _ in range(gk_pairs):
            i = int(rng.integers(1, window))
            n = int(rng.integers(1, window - i + 1))
            pairs.append((i, n))
    records = gk_inequality_check(traj, operator, pairs)
    failures = sum(1 for r in records if r.slack < -INEQUALITY_SLACK_TOL)
    worst = min((r.slack for r in records), default=np.inf)
    return {
        "property": "gk_inequality",
        "status": STATUS_FAIL if failures else STATUS_PASS,
        "trials": len(records),
        "failures": failures,
        "witness": None,
        "detail": {"min_slack": float(worst)},
        "records": [r.to_dict() for r in records],
    }


def _fejer_entry(
    traj: Trajectory,
    operator: Operator,
    rel: ConeRelation,
    space: NormSpace,
    omega,
) -> dict:
    x1 = traj.iterates[0]
    candidates = (
        [as_vector(omega, space.dimension, "omega")]
        if omega is not None
        else list(known_fixed_points(operator).known_points)
    )
    for w in candidates:
        if rel.contains(x1, w):
            entry = audit_fejer(traj, w, operator, rel, space).to_dict()
            entry.setdefault("detail", {})["direction"] = "forward"
            return entry
        if rel.contains(w, x1):
            # start above omega: the same monotone argument applies under
            # the reversed graph, so audit with the cone -K
            entry = audit_fejer(traj, w, operator, rel.reversed(), space).to_dict()
            entry.setdefault("detail", {})["direction"] = "reverse"
            return entry
    note = (
        "no known fixed point is comparable to x_1"
        if candidates
        else "operator has no analytically known fixed point"
    )
    return _not_met("fejer_monotone", note)


def _rate_entry(
    traj: Trajectory,
    schedule: Schedule,
    diam: float,
    case: str | None,
    rate_spans,
    rate_samples: int,
) -> dict:
    if case == "none":
        return _not_met("rate_inequality", "start is not comparable with its image")
    if not schedule.enforce_bounds:
        return _not_met(
            "rate_inequality", "schedule does not enforce bounds [a, b] in (0, 1)"
        )
    spans = [int(n) for n in rate_spans if int(n) <= traj.n_iterates - 1]
    checks = rate_audit(traj, schedule, diam, spans, rate_samples)
    trials = sum(c.trials for c in checks)
    failures = sum(c.failures for c in checks)
    worst = min((c.min_slack for c in checks), default=np.inf)
    return {
        "property": "rate_inequality",
        "status": STATUS_FAIL if failures else STATUS_PASS,
        "trials": trials,
        "failures": failures,
        "witness": None,
        "detail": jsonable({"min_slack": worst, "spans": spans}),
        "records": [c.to_dict() for c in checks],
    }


def exit_code_from_audits(results: dict[str, dict]) -> int:
    """0 all pass, 2 on any failure, 3 on hypothesis-not-met without failures."""
    statuses = [entry["status"] for entry in results.values()]
    if any(s == STATUS_FAIL for s in statuses):
        return 2
    if any(s == STATUS_HYPOTHESIS_NOT_MET for s in statuses):
        return 3
    return 0
