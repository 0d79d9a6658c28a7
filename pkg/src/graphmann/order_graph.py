"""Cone-generated edge relations and sampled verifiers for the graph axioms.

An edge x -> y holds iff y - x lies in the polyhedral cone
K = {v : G v >= 0 componentwise}.  Cones are closed under addition and
nonnegative scaling and contain 0, so the relation is reflexive, transitive,
and compatible with convex combinations by construction; the audit functions
verify those facts numerically on sampled points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from ._util import as_vector, frozen_array, jsonable
from .errors import DimensionMismatchError, InputError

EDGE_SLACK_TOL = 1e-12

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_HYPOTHESIS_NOT_MET = "hypothesis_not_met"


@dataclass(frozen=True, eq=False)
class ConeRelation:
    """Edge relation generated by a polyhedral cone.

    `generator_matrix` has one row per defining inequality; zero rows (an
    empty matrix with shape (0, d)) give the full relation.  `slack_tol` is
    the absolute per-component allowance that keeps round-off in convex
    combinations from flipping membership.
    """

    generator_matrix: np.ndarray
    slack_tol: float = EDGE_SLACK_TOL

    def __post_init__(self) -> None:
        mat = np.asarray(self.generator_matrix, dtype=float)
        if mat.ndim != 2:
            raise InputError(
                f"generator_matrix must be 2-d, got shape {mat.shape}"
            )
        if mat.shape[1] < 1:
            raise InputError("generator_matrix must have at least one column")
        if not self.slack_tol >= 0:
            raise InputError(f"slack_tol must be >= 0, got {self.slack_tol}")
        object.__setattr__(self, "generator_matrix", frozen_array(mat))

    @property
    def dimension(self) -> int:
        return self.generator_matrix.shape[1]

    def contains(self, x, y) -> bool:
        """True iff (x, y) is an edge, i.e. y - x is in the cone."""
        xv = as_vector(x, self.dimension, "x")
        yv = as_vector(y, self.dimension, "y")
        return self.diff_in_cone(yv - xv)

    def diff_in_cone(self, diff: np.ndarray) -> bool:
        if self.generator_matrix.shape[0] == 0:
            return True
        return bool(np.all(self.generator_matrix @ diff >= -self.slack_tol))

    def diffs_in_cone(self, diffs: np.ndarray) -> np.ndarray:
        """Vectorized membership for rows of a (n, d) difference array."""
        if diffs.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"difference rows have dimension {diffs.shape[1]}, expected {self.dimension}"
            )
        if self.generator_matrix.shape[0] == 0:
            return np.ones(diffs.shape[0], dtype=bool)
        return np.all(diffs @ self.generator_matrix.T >= -self.slack_tol, axis=1)

    def reversed(self) -> "ConeRelation":
        """Relation of the reversed graph (cone -K)."""
        return ConeRelation(-self.generator_matrix, self.slack_tol)

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.generator_matrix)


@dataclass(eq=False)
class AuditReport:
    """Outcome of one sampled property check.

    `witness` carries the vectors of the first failure and is present exactly
    when failures > 0.  `hypothesis_met` distinguishes "the property's
    hypotheses did not apply" from a genuine pass or fail.
    """

    property_name: str
    trials: int = 0
    failures: int = 0
    witness: tuple[np.ndarray, ...] | None = None
    hypothesis_met: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.hypothesis_met:
            return STATUS_HYPOTHESIS_NOT_MET
        return STATUS_FAIL if self.failures else STATUS_PASS

    def record(self, ok: bool, *witness_vectors: np.ndarray) -> None:
        self.trials += 1
        if not ok:
            self.failures += 1
            if self.witness is None:
                self.witness = tuple(np.array(v) for v in witness_vectors)

    def to_dict(self) -> dict:
        return {
            "property": self.property_name,
            "status": self.status,
            "trials": self.trials,
            "failures": self.failures,
            "witness": jsonable([v for v in self.witness]) if self.witness else None,
            **({"detail": jsonable(self.extra)} if self.extra else {}),
        }


def edge_contains(rel: ConeRelation, x, y) -> bool:
    return rel.contains(x, y)


def undirected_contains(rel, x, y) -> bool:
    """Membership in E(G) union E(G^-1)."""
    return rel.contains(x, y) or rel.contains(y, x)


def interval_contains(
    rel: ConeRelation, anchor, x, direction: Literal["up", "down"]
) -> bool:
    """Membership of x in the up-set [anchor, ->) or down-set (<-, anchor]."""
    if direction == "up":
        return rel.contains(anchor, x)
    if direction == "down":
        return rel.contains(x, anchor)
    raise InputError(f"direction must be 'up' or 'down', got {direction!r}")


# --- samplers -------------------------------------------------------------

def sample_cone_element(
    rel: ConeRelation, rng: np.random.Generator, max_tries: int = 64
) -> np.ndarray:
    """Draw a nonzero element of the cone.

    Solves G v = s for a nonnegative slack vector s via the pseudoinverse and
    adds null-space noise; exact for full-row-rank generators, verified and
    retried otherwise.
    """
    d = rel.dimension
    m = rel.generator_matrix.shape[0]
    if m == 0:
        v = rng.standard_normal(d)
        while np.linalg.norm(v) < 1e-12:
            v = rng.standard_normal(d)
        return v
    pinv = rel._pinv
    null_proj = np.eye(d) - pinv @ rel.generator_matrix
    for _ in range(max_tries):
        slack = np.abs(rng.standard_normal(m))
        v = pinv @ slack + null_proj @ rng.standard_normal(d)
        if np.linalg.norm(v) > 1e-12 and np.all(
            rel.generator_matrix @ v >= -rel.slack_tol
        ):
            return v
    raise InputError(
        "could not sample a cone element; generator matrix may be infeasible"
    )


def gaussian_point_source(
    dimension: int, rng: np.random.Generator, scale: float = 1.0
) -> Callable[[], np.ndarray]:
    def draw() -> np.ndarray:
        return scale * rng.standard_normal(dimension)

    return draw


def chained_triple_source(
    rel: ConeRelation, rng: np.random.Generator, scale: float = 1.0
) -> Callable[[], tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Triples (x, y, z) with exact cone increments, so edge(x,y) and edge(y,z) hold."""

    def draw() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = scale * rng.standard_normal(rel.dimension)
        y = x + sample_cone_element(rel, rng)
        z = y + sample_cone_element(rel, rng)
        return x, y, z

    return draw


def edge_pair_source(
    rel: ConeRelation, rng: np.random.Generator, scale: float = 1.0
) -> Callable[[], tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]]:
    """Two independent edges ((x, y), (w, z)) built from cone increments."""

    def draw():
        x = scale * rng.standard_normal(rel.dimension)
        w = scale * rng.standard_normal(rel.dimension)
        return (x, x + sample_cone_element(rel, rng)), (
            w,
            w + sample_cone_element(rel, rng),
        )

    return draw


# --- axiom auditors -------------------------------------------------------

def audit_reflexive(rel, sample_count: int, sampler: Callable[[], np.ndarray]) -> AuditReport:
    """Check edge(x, x) on sampled points."""
    if sample_count < 1:
        raise InputError(f"sample_count must be >= 1, got {sample_count}")
    report = AuditReport("reflexive")
    for _ in range(sample_count):
        x = sampler()
        report.record(rel.contains(x, x), x)
    return report


def audit_transitive(rel, triple_count: int, sampler: Callable[[], tuple]) -> AuditReport:
    """Check edge(x, z) on sampled chained triples.

    Triples whose chain precondition edge(x,y), edge(y,z) does not hold are
    skipped without counting; the attempt budget is 50x the requested count.
    """
    if triple_count < 1:
        raise InputError(f"triple_count must be >= 1, got {triple_count}")
    report = AuditReport("transitive")
    attempts = 0
    while report.trials < triple_count and attempts < 50 * triple_count:
        attempts += 1
        x, y, z = sampler()
        if not (rel.contains(x, y) and rel.contains(y, z)):
            continue
        report.record(rel.contains(x, z), x, y, z)
    if report.trials < triple_count:
        raise InputError("triple sampler produced too few chained triples")
    return report


def audit_cg(
    rel,
    sample_count: int,
    alphas: list[float],
    sampler: Callable[[], tuple] | None = None,
    rng: np.random.Generator | None = None,
) -> AuditReport:
    """Check that convex combinations of sampled edge pairs are edges."""
    if sample_count < 1:
        raise InputError(f"sample_count must be >= 1, got {sample_count}")
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise InputError("alphas must be nonempty")
    if any(a < 0.0 or a > 1.0 for a in alphas):
        raise InputError(f"alphas must lie in [0, 1], got {alphas}")
    if sampler is None:
        sampler = edge_pair_source(rel, rng if rng is not None else np.random.default_rng(0))
    report = AuditReport("convexity_cg")
    for _ in range(sample_count):
        (x, y), (w, z) = sampler()
        for a in alphas:
            report.record(
                rel.contains(a * x + (1 - a) * w, a * y + (1 - a) * z), x, y, w, z
            )
    return report
