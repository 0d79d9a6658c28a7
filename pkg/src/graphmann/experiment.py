"""Experiment pipeline: build, run, audit, and write reports.

One experiment produces up to three artifacts in its output directory:
`trajectory.csv` (per-iterate table), `run.json` (full trajectory record
with the config echoed), and `audits.json` (per-auditor status).  Sweeps run
one experiment per axis value concurrently and aggregate a summary CSV.
Identical config and seed give byte-identical files.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import fmt17
from .config import (
    ExperimentConfig,
    build_body,
    build_operator,
    build_relation,
    build_schedule,
    build_space,
    build_start,
)
from .diagnostics import exit_code_from_audits, run_audits, write_gk_records_csv
from .errors import ConfigError
from .mann import (
    STOP_MAX_ITER,
    STOP_TOLERANCE,
    Trajectory,
    read_trajectory_csv,
    run,
    trajectory_from_dict,
    trajectory_to_dict,
    write_trajectory_csv,
)
from .normed_space import diameter

RUN_SCHEMA_VERSION = 1


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trajectory: Trajectory
    audits: dict[str, dict]
    exit_code: int
    out_dir: Path | None


def _write_outputs(
    out_dir: Path, config: ExperimentConfig, traj: Trajectory, audits: dict
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in config.output.formats:
        write_trajectory_csv(traj, out_dir / "trajectory.csv")
        gk_records = audits.get("gk_inequality", {}).get("records")
        if gk_records:
            write_gk_records_csv(gk_records, out_dir / "gk_records.csv")
    if "json" in config.output.formats:
        record = {
            "schema_version": RUN_SCHEMA_VERSION,
            "config": config.to_dict(),
            "trajectory": trajectory_to_dict(traj),
        }
        (out_dir / "run.json").write_text(json.dumps(record, indent=2) + "\n")
    report = {
        "schema_version": RUN_SCHEMA_VERSION,
        "stop_reason": traj.stop_reason,
        "iterations": traj.n_iterates,
        "final_residual": traj.final_residual,
        "exit_code": exit_code_from_audits(audits),
        "audits": audits,
    }
    (out_dir / "audits.json").write_text(json.dumps(report, indent=2) + "\n")


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    write: bool = True,
) -> ExperimentResult:
    """Execute one configured experiment end to end."""
    seed = config.seed if seed is None else int(seed)
    space = build_space(config)
    body = build_body(config, space)
    rel = build_relation(config, space)
    operator = build_operator(config, space, body)
    schedule = build_schedule(config)
    rng = np.random.default_rng([seed, 1])
    x1 = build_start(config, operator, rel, rng)
    traj = run(
        operator,
        x1,
        schedule,
        max_iter=config.run.max_iter,
        tol=config.run.tol,
        rel=rel,
        record_stride=config.run.record_stride,
        relation_ref=config.relation.kind,
    )
    audits = run_audits(
        config.audits,
        traj,
        operator,
        rel,
        space,
        schedule,
        diam=diameter(space, body),
        seed=seed,
    )
    code = exit_code_from_audits(audits)
    target = Path(out_dir) if out_dir is not None else Path(config.output.directory)
    if write:
        _write_outputs(target, config, traj, audits)
    return ExperimentResult(config, traj, audits, code, target if write else None)


# --- stored-trajectory audit --------------------------------------------------

def load_stored_trajectory(path: str | Path, config: ExperimentConfig) -> Trajectory:
    """Read a trajectory export (run.json or full-history CSV).

    CSV exports carry no stop reason, so it is inferred from the final
    residual against the configured tolerance.
    """
    path = Path(path)
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read trajectory {path}: {exc}") from exc
        record = data.get("trajectory", data) if isinstance(data, dict) else None
        if not isinstance(record, dict):
            raise ConfigError(f"{path} does not contain a trajectory record")
        traj = trajectory_from_dict(record)
    else:
        traj = read_trajectory_csv(path)
        traj.stop_reason = (
            STOP_TOLERANCE if traj.final_residual <= config.run.tol else STOP_MAX_ITER
        )
    if traj.dimension != config.space.dimension:
        raise ConfigError(
            f"trajectory dimension {traj.dimension} does not match the config"
        )
    return traj


def audit_stored(
    trajectory_path: str | Path,
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
) -> tuple[int, dict]:
    """Re-run the trajectory consistency check plus all configured auditors
    on a stored trajectory."""
    space = build_space(config)
    body = build_body(config, space)
    rel = build_relation(config, space)
    operator = build_operator(config, space, body)
    schedule = build_schedule(config)
    traj = load_stored_trajectory(trajectory_path, config)
    if traj.start_edge_forward is None:
        tx1 = operator._apply(np.array(traj.iterates[0]))
        traj.start_edge_forward = rel.contains(traj.iterates[0], tx1)
        traj.start_edge_reverse = rel.contains(tx1, traj.iterates[0])
    names = ["trajectory"] + [a for a in config.audits if a != "trajectory"]
    audits = run_audits(
        names,
        traj,
        operator,
        rel,
        space,
        schedule,
        diam=diameter(space, body),
        seed=config.seed,
    )
    code = exit_code_from_audits(audits)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report = {
            "schema_version": RUN_SCHEMA_VERSION,
            "source": str(trajectory_path),
            "exit_code": code,
            "audits": audits,
        }
        (out / "audits.json").write_text(json.dumps(report, indent=2) + "\n")
    return code, audits


# --- sweeps -------------------------------------------------------------------

def set_config_value(data: dict, axis: str, value: float) -> dict:
    """Return a copy of the raw config dict with the dotted `axis` replaced."""
    parts = axis.split(".")
    out = json.loads(json.dumps(data))
    node = out
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown sweep axis {axis!r}")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    old = node[leaf]
    if not isinstance(old, (int, float)) or isinstance(old, bool):
        raise ConfigError(f"sweep axis {axis!r} is not numeric")
    if isinstance(old, int) and float(value).is_integer():
        node[leaf] = int(value)
    else:
        node[leaf] = float(value)
    return out


def run_sweep(
    config_data: dict,
    axis: str,
    values: list[float],
    out_dir: str | Path | None = None,
    seed: int | None = None,
) -> tuple[int, list[dict]]:
    """Run one experiment per axis value concurrently; aggregate a summary.

    The summary CSV has one row per value (in the given order): value,
    final_residual, iterations, all_audits_pass.  The exit code follows the
    single-run contract over the aggregate.
    """
    if not values:
        raise ConfigError("sweep needs a nonempty list of values")
    base = ExperimentConfig.from_dict(config_data)
    root = Path(out_dir) if out_dir is not None else Path(base.output.directory)
    configs = []
    for value in values:
        data = set_config_value(config_data, axis, value)
        configs.append(ExperimentConfig.from_dict(data))

    def one(idx: int) -> ExperimentResult:
        sub = root / f"{axis.replace('.', '_')}={values[idx]:g}"
        return run_experiment(configs[idx], out_dir=sub, seed=seed)

    with ThreadPoolExecutor(max_workers=min(8, len(values))) as pool:
        results = list(pool.map(one, range(len(values))))

    rows = []
    for value, res in zip(values, results):
        rows.append(
            {
                "value": value,
                "final_residual": res.trajectory.final_residual,
                "iterations": res.trajectory.n_iterates,
                "all_audits_pass": res.exit_code == 0,
            }
        )
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "final_residual", "iterations", "all_audits_pass"])
        for row in rows:
            writer.writerow(
                [
                    fmt17(row["value"]),
                    fmt17(row["final_residual"]),
                    str(row["iterations"]),
                    str(row["all_audits_pass"]).lower(),
                ]
            )
    codes = [res.exit_code for res in results]
    if any(c == 2 for c in codes):
        return 2, rows
    if any(c == 3 for c in codes):
        return 3, rows
    return 0, rows
