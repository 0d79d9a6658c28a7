"""The averaged iteration x_{n+1} = t_n T(x_n) + (1 - t_n) x_n with recording.

Runs are sequential by definition; the recorded trajectory keeps residuals
and step sizes for every n and (optionally decimated) iterates, and every
step can be recomputed bit-identically from the records.  Indices are
1-based in all exported artifacts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._util import as_vector, fmt17, frozen_array, jsonable
from .errors import ConfigError, DomainError, InputError
from .normed_space import MEMBERSHIP_TOL, contains
from .operators import Operator
from .order_graph import AuditReport, ConeRelation

STOP_TOLERANCE = "tolerance_met"
STOP_MAX_ITER = "max_iterations"
STOP_DIVERGED = "diverged_from_domain"

STEP_RECOMPUTE_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Schedule:
    """Step sequence (t_n) with declared bounds [a, b].

    With `enforce_bounds` (the hypothesis under which residuals provably
    vanish) every step must satisfy 0 < a <= t_n <= b < 1.  Without it
    (negative-test mode) steps may be anywhere in [0, 1] and the bounds are
    informational.
    """

    a: float
    b: float
    enforce_bounds: bool = True
    t_constant: float | None = None
    t_values: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.t_constant is None) == (self.t_values is None):
            raise ConfigError("schedule needs exactly one of t_constant / t_values")
        if self.t_values is not None:
            vals = as_vector(self.t_values, name="t_values")
            if vals.shape[0] < 1:
                raise ConfigError("explicit schedule must contain at least one step")
            object.__setattr__(self, "t_values", frozen_array(vals))
        lo, hi = self._range()
        if self.enforce_bounds:
            if not (0.0 < self.a <= self.b < 1.0):
                raise ConfigError(
                    f"bounds must satisfy 0 < a <= b < 1, got a={self.a}, b={self.b}"
                )
            if lo < self.a - 1e-15 or hi > self.b + 1e-15:
                raise ConfigError("schedule steps leave the declared [a, b]")
        else:
            if lo < 0.0 or hi > 1.0:
                raise ConfigError("schedule steps must lie in [0, 1]")

    def _range(self) -> tuple[float, float]:
        if self.t_constant is not None:
            return self.t_constant, self.t_constant
        return float(self.t_values.min()), float(self.t_values.max())

    @classmethod
    def constant(
        cls,
        t: float,
        a: float | None = None,
        b: float | None = None,
        enforce_bounds: bool = True,
    ) -> "Schedule":
        return cls(
            a=t if a is None else a,
            b=t if b is None else b,
            enforce_bounds=enforce_bounds,
            t_constant=float(t),
        )

    @classmethod
    def explicit(
        cls,
        values,
        a: float | None = None,
        b: float | None = None,
        enforce_bounds: bool = True,
    ) -> "Schedule":
        vals = as_vector(values, name="values")
        return cls(
            a=float(vals.min()) if a is None else a,
            b=float(vals.max()) if b is None else b,
            enforce_bounds=enforce_bounds,
            t_values=vals,
        )

    @property
    def steps_available(self) -> int | None:
        """Length cap for explicit schedules, None when unbounded."""
        return None if self.t_values is None else int(self.t_values.shape[0])

    def value(self, n: int) -> float:
        """Step size for the step leaving x_n (n is 1-based)."""
        if n < 1:
            raise InputError(f"step index must be >= 1, got {n}")
        if self.t_constant is not None:
            return self.t_constant
        if n > self.t_values.shape[0]:
            raise InputError(f"explicit schedule has no step {n}")
        return float(self.t_values[n - 1])


@dataclass(eq=False)
class Trajectory:
    """Recorded Mann run.

    `residuals` and `schedule_used` cover every n (one residual per iterate,
    one step per transition); `iterates` may be decimated, with 1-based
    original indices in `iterate_indices` (the first and final iterates are
    always present).
    """

    iterates: np.ndarray
    iterate_indices: np.ndarray
    residuals: np.ndarray
    schedule_used: np.ndarray
    stop_reason: str
    start_edge_forward: bool | None = None
    start_edge_reverse: bool | None = None
    operator_ref: str = ""
    space_ref: str = ""
    relation_ref: str = ""

    @property
    def n_iterates(self) -> int:
        return int(self.residuals.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.iterates.shape[1])

    @property
    def is_full_history(self) -> bool:
        return self.iterates.shape[0] == self.n_iterates

    @property
    def final_iterate(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    def start_edge_case(self) -> str | None:
        """'forward' / 'reverse' / 'both' / 'none', or None when unchecked."""
        if self.start_edge_forward is None or self.start_edge_reverse is None:
            return None
        if self.start_edge_forward and self.start_edge_reverse:
            return "both"
        if self.start_edge_forward:
            return "forward"
        if self.start_edge_reverse:
            return "reverse"
        return "none"


def mann_step(x, tx, t: float) -> np.ndarray:
    """One averaged step t*T(x) + (1-t)*x."""
    if not (0.0 <= t <= 1.0):
        raise InputError(f"step size must lie in [0, 1], got {t}")
    xv = as_vector(x, name="x")
    tv = as_vector(tx, xv.shape[0], "tx")
    return t * tv + (1.0 - t) * xv


def run(
    operator: Operator,
    x1,
    schedule: Schedule,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    rel: ConeRelation | None = None,
    require_comparable_start: bool = False,
    record_stride: int = 1,
    operator_ref: str = "",
    space_ref: str = "",
    relation_ref: str = "",
) -> Trajectory:
    """Iterate from x1 until the residual ||x_n - T(x_n)|| falls to `tol` or
    `max_iter` iterates are produced.

    When `rel` is given, comparability of (x1, T(x1)) is checked in both
    orientations and recorded on the trajectory; with
    `require_comparable_start` the run refuses to start if neither holds.
    Explicit schedules cap the run at their own length.
    """
    if max_iter < 1:
        raise InputError(f"max_iter must be >= 1, got {max_iter}")
    if record_stride < 1:
        raise InputError(f"record_stride must be >= 1, got {record_stride}")
    space = operator.space
    x = as_vector(x1, space.dimension, "x1")
    if not contains(space, operator.domain, x, MEMBERSHIP_TOL):
        raise DomainError("starting point lies outside the operator domain")
    forward = reverse = None
    if rel is not None:
        tx1 = operator._apply(x)
        forward = rel.contains(x, tx1)
        reverse = rel.contains(tx1, x)
        if require_comparable_start and not (forward or reverse):
            raise ConfigError(
                "starting point is not comparable with its image in either direction"
            )

    effective_max = max_iter
    if schedule.steps_available is not None:
        effective_max = min(max_iter, schedule.steps_available + 1)

    recorded: list[np.ndarray] = []
    indices: list[int] = []
    residuals: list[float] = []
    steps: list[float] = []

    def record(n: int, point: np.ndarray) -> None:
        recorded.append(np.array(point))
        indices.append(n)

    stop = None
    n = 1
    while True:
        tx = operator._apply(x)
        residuals.append(space.norm(x - tx))
        if (n - 1) % record_stride == 0:
            record(n, x)
        if residuals[-1] <= tol:
            stop = STOP_TOLERANCE
            break
        if n >= effective_max:
            stop = STOP_MAX_ITER
            break
        t = schedule.value(n)
        x_next = t * tx + (1.0 - t) * x
        steps.append(t)
        if not contains(space, operator.domain, x_next, MEMBERSHIP_TOL):
            n += 1
            residuals.append(space.norm(x_next - operator._apply(x_next)))
            record(n, x_next)
            stop = STOP_DIVERGED
            break
        x = x_next
        n += 1
    if indices[-1] != n:  # always keep the final iterate
        record(n, x)

    return Trajectory(
        iterates=np.stack(recorded),
        iterate_indices=np.array(indices, dtype=int),
        residuals=np.array(residuals),
        schedule_used=np.array(steps),
        stop_reason=stop,
        start_edge_forward=forward,
        start_edge_reverse=reverse,
        operator_ref=operator_ref or operator.describe(),
        space_ref=space_ref or f"l{space.p}(d={space.dimension})",
        relation_ref=relation_ref,
    )


def full_iterates(traj: Trajectory, operator: Operator) -> np.ndarray:
    """All iterates x_1..x_N; gaps of a decimated record are replayed with the
    recorded step sizes (bit-identical to the original run)."""
    if traj.n_iterates == 0:
        raise InputError("empty trajectory")
    if traj.is_full_history:
        return traj.iterates
    out = np.empty((traj.n_iterates, traj.dimension))
    for j in range(traj.iterate_indices.shape[0] - 1):
        lo, hi = int(traj.iterate_indices[j]), int(traj.iterate_indices[j + 1])
        x = np.array(traj.iterates[j])
        out[lo - 1] = x
        for n in range(lo, hi):
            t = traj.schedule_used[n - 1]
            x = t * operator._apply(x) + (1.0 - t) * x
            out[n] = x
    out[-1] = traj.iterates[-1]
    return out


def verify_trajectory(traj: Trajectory, operator: Operator) -> AuditReport:
    """Recompute every step and every residual of a recorded trajectory.

    Each transition is replayed with the recorded step size and compared to
    the recorded iterate (norm tolerance 1e-12); each residual is recomputed
    the same way.  Any run() output verifies with zero failures.
    """
    if traj.n_iterates == 0 or traj.iterates.shape[0] == 0:
        raise InputError("empty trajectory")
    n_total = traj.n_iterates
    if traj.schedule_used.shape[0] != n_total - 1:
        raise InputError("schedule_used length must be n_iterates - 1")
    if int(traj.iterate_indices[0]) != 1 or int(traj.iterate_indices[-1]) != n_total:
        raise InputError("recorded iterates must span indices 1..N")
    space = operator.space
    report = AuditReport("trajectory_consistency")
    for j in range(traj.iterate_indices.shape[0] - 1):
        lo, hi = int(traj.iterate_indices[j]), int(traj.iterate_indices[j + 1])
        x = np.array(traj.iterates[j])
        for n in range(lo, hi):
            tx = operator._apply(x)
            report.record(
                abs(space.norm(x - tx) - traj.residuals[n - 1]) <= STEP_RECOMPUTE_TOL, x
            )
            t = traj.schedule_used[n - 1]
            x = t * tx + (1.0 - t) * x
        report.record(
            space.norm(x - traj.iterates[j + 1]) <= STEP_RECOMPUTE_TOL,
            x,
            traj.iterates[j + 1],
        )
    final = traj.iterates[-1]
    report.record(
        abs(space.norm(final - operator._apply(final)) - traj.residuals[-1])
        <= STEP_RECOMPUTE_TOL,
        final,
    )
    return report


# --- serialization ----------------------------------------------------------

def write_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV with one row per recorded iterate: n, x_1..x_d, residual, t_n.

    t_n is the step leaving x_n and is empty on the final row.  Numbers use
    17 significant digits, which round-trips doubles exactly.
    """
    d = traj.dimension
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n"] + [f"x_{i + 1}" for i in range(d)] + ["residual", "t_n"])
        for j, n in enumerate(traj.iterate_indices):
            n = int(n)
            t = fmt17(traj.schedule_used[n - 1]) if n <= traj.n_iterates - 1 else ""
            writer.writerow(
                [str(n)]
                + [fmt17(v) for v in traj.iterates[j]]
                + [fmt17(traj.residuals[n - 1]), t]
            )


def read_trajectory_csv(path) -> Trajectory:
    """Rebuild a trajectory from a full-history CSV export.

    Decimated exports cannot be audited from CSV alone (use the JSON record);
    rows must carry consecutive indices starting at 1.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError("trajectory CSV is empty")
    header = rows[0]
    if len(header) < 4 or header[0] != "n" or header[-2] != "residual" or header[-1] != "t_n":
        raise ConfigError("trajectory CSV header must be n, x_1..x_d, residual, t_n")
    d = len(header) - 3
    if header[1 : 1 + d] != [f"x_{i + 1}" for i in range(d)]:
        raise ConfigError("trajectory CSV coordinate columns must be x_1..x_d")
    body = rows[1:]
    if not body:
        raise ConfigError("trajectory CSV has no data rows")
    iterates, indices, residuals, steps = [], [], [], []
    for k, row in enumerate(body):
        if len(row) != len(header):
            raise ConfigError(f"row {k + 2} has {len(row)} fields, expected {len(header)}")
        try:
            n = int(row[0])
            if n != k + 1:
                raise ConfigError("CSV audit requires consecutive indices starting at 1")
            indices.append(n)
            iterates.append([float(v) for v in row[1 : 1 + d]])
            residuals.append(float(row[1 + d]))
            t_field = row[2 + d]
            if k < len(body) - 1:
                if t_field == "":
                    raise ConfigError(f"row {k + 2} is missing its step size")
                steps.append(float(t_field))
        except ValueError as exc:
            raise ConfigError(f"row {k + 2} is not numeric: {exc}") from exc
    return Trajectory(
        iterates=np.array(iterates),
        iterate_indices=np.array(indices, dtype=int),
        residuals=np.array(residuals),
        schedule_used=np.array(steps),
        stop_reason="unknown",
    )


def trajectory_to_dict(traj: Trajectory) -> dict:
    return jsonable(
        {
            "iterates": traj.iterates,
            "iterate_indices": traj.iterate_indices,
            "residuals": traj.residuals,
            "schedule_used": traj.schedule_used,
            "stop_reason": traj.stop_reason,
            "start_edge_forward": traj.start_edge_forward,
            "start_edge_reverse": traj.start_edge_reverse,
            "operator_ref": traj.operator_ref,
            "space_ref": traj.space_ref,
            "relation_ref": traj.relation_ref,
        }
    )


def trajectory_from_dict(data: dict) -> Trajectory:
    try:
        return Trajectory(
            iterates=np.array(data["iterates"], dtype=float),
            iterate_indices=np.array(data["iterate_indices"], dtype=int),
            residuals=np.array(data["residuals"], dtype=float),
            schedule_used=np.array(data["schedule_used"], dtype=float),
            stop_reason=str(data["stop_reason"]),
            start_edge_forward=data.get("start_edge_forward"),
            start_edge_reverse=data.get("start_edge_reverse"),
            operator_ref=data.get("operator_ref", ""),
            space_ref=data.get("space_ref", ""),
            relation_ref=data.get("relation_ref", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed trajectory record: {exc}") from exc
