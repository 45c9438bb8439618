"""Batch experiment running, summary statistics, and report emission.

Also holds the pendulum-swing force estimation used to validate transient
contact forces: a bucket deflected to angle theta after an impact implies,
by energy conservation, a release angular rate and hence an average contact
force over the impact duration.
"""

from __future__ import annotations

import csv
import math
import multiprocessing
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import RobotModel, ScenarioConfig
from .policy import PolicyKind, PolicyParams, Reaction
from .sensing import ContactClass
from .simworld import ContactRecord, ExperimentRecord, JitterConfig, SimConfig, run_task

DEFAULT_GRAVITY = 9.81

# Default swing-table inputs: measured peak deflections per approach speed
# and the candidate contact durations (seconds).
DEFAULT_TABLE_ANGLES = {0.4: math.radians(10.3), 0.6: math.radians(16.1)}
DEFAULT_TABLE_DELTA_TS = (0.020, 0.030, 0.040, 0.050)
DEFAULT_STRING_LENGTH = 0.64  # m, derived; see scripts/derive_string_length.py
DEFAULT_BUCKET_MASS = 5.6  # kg


@dataclass(frozen=True)
class PendulumReading:
    """Observed peak swing of a suspended bucket after one impact."""

    theta_max: float  # rad
    string_length: float  # m
    mass: float  # kg
    delta_t: float  # s, assumed contact duration

    def __post_init__(self):
        if not (self.theta_max > 0.0 and self.theta_max < math.pi / 2):
            raise ValueError("theta_max must lie in (0, pi/2)")
        for name in ("string_length", "mass", "delta_t"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


def omega_from_angle(theta: float, string_length: float, gravity: float = DEFAULT_GRAVITY) -> float:
    """Release angular rate implied by a peak swing angle (energy balance)."""
    if string_length <= 0.0:
        raise ValueError("string length must be positive")
    return math.sqrt(2.0 * gravity / string_length * (1.0 - math.cos(theta)))


def pendulum_avg_force(reading: PendulumReading, gravity: float = DEFAULT_GRAVITY) -> float:
    """Average contact force over ``delta_t`` from the impulse-momentum balance."""
    omega = omega_from_angle(reading.theta_max, reading.string_length, gravity)
    return reading.mass * reading.string_length * omega / reading.delta_t


def make_table1(
    string_length: float = DEFAULT_STRING_LENGTH,
    mass: float = DEFAULT_BUCKET_MASS,
    angles: Optional[dict[float, float]] = None,
    delta_ts: Sequence[float] = DEFAULT_TABLE_DELTA_TS,
    gravity: float = DEFAULT_GRAVITY,
) -> dict[tuple[float, float], float]:
    """Force table keyed by (approach speed, contact duration).

    ``angles`` maps approach speed (m/s) to peak swing angle (rad).
    """
    if angles is None:
        angles = DEFAULT_TABLE_ANGLES
    table = {}
    for speed, theta in angles.items():
        for dt in delta_ts:
            reading = PendulumReading(theta, string_length, mass, dt)
            table[(speed, dt)] = pendulum_avg_force(reading, gravity)
    return table


# ---------------------------------------------------------------------------
# Batch running


@dataclass(frozen=True)
class SummaryRow:
    policy: PolicyKind
    speed: float
    metric: str
    mean: float
    median: float
    p25: float
    p75: float
    min: float
    max: float
    count: int


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[SummaryRow, ...]

    def get(self, policy: PolicyKind, speed: float, metric: str) -> SummaryRow:
        for row in self.rows:
            if row.policy is policy and row.speed == speed and row.metric == metric:
                return row
        raise KeyError((policy, speed, metric))


def _run_one(args) -> ExperimentRecord:
    model, scenario, policy, config = args
    return run_task(model, scenario, policy, config)


def _summarize(values: Sequence[float]) -> tuple[float, float, float, float, float, float]:
    arr = np.asarray(values, dtype=float)
    return (
        float(np.mean(arr)),
        float(np.median(arr)),
        float(np.percentile(arr, 25)),
        float(np.percentile(arr, 75)),
        float(np.min(arr)),
        float(np.max(arr)),
    )


def summarize_records(records: Sequence[ExperimentRecord]) -> SummaryTable:
    """Per (policy, speed) statistics of task time and stop count."""
    keys = []
    for r in records:
        key = (r.policy, r.speed)
        if key not in keys:
            keys.append(key)
    rows = []
    for policy, speed in keys:
        group = [r for r in records if r.policy is policy and r.speed == speed]
        for metric, values in (
            ("task_time", [r.task_time for r in group]),
            ("stop_count", [float(r.stop_count) for r in group]),
        ):
            mean, median, p25, p75, vmin, vmax = _summarize(values)
            rows.append(
                SummaryRow(policy, speed, metric, mean, median, p25, p75, vmin, vmax, len(group))
            )
    return SummaryTable(tuple(rows))


def run_batch(
    model: RobotModel,
    scenario: ScenarioConfig,
    policies: Sequence[PolicyKind],
    speeds: Sequence[float],
    reps: int,
    base_seed: int = 0,
    *,
    parallel: Optional[int] = None,
    dt: Optional[float] = None,
    jitter: Optional[JitterConfig] = None,
    params: Optional[PolicyParams] = None,
) -> tuple[list[ExperimentRecord], SummaryTable]:
    """Run ``reps`` seeded repetitions per (policy, speed) combination.

    Repetition i uses seed ``base_seed + i``; results are ordered by
    (policy, speed, seed) regardless of execution order, so the output is
    deterministic even with ``parallel > 1``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    jobs = []
    for policy in policies:
        for speed in speeds:
            for rep in range(reps):
                kwargs = dict(cartesian_speed=speed, rng_seed=base_seed + rep)
                if dt is not None:
                    kwargs["dt"] = dt
                if jitter is not None:
                    kwargs["jitter"] = jitter
                config = SimConfig(**kwargs)
                jobs.append((model, scenario, policy, config))

    if parallel is None:
        parallel = os.cpu_count() or 1
    if parallel > 1 and len(jobs) > 1:
        with multiprocessing.Pool(parallel) as pool:
            records = pool.map(_run_one, jobs)
    else:
        records = [_run_one(job) for job in jobs]
    return records, summarize_records(records)


# ---------------------------------------------------------------------------
# CSV emission

_RECORD_COLUMNS = (
    "policy",
    "speed",
    "seed",
    "task_time",
    "stop_count",
    "success",
    "n_contacts",
    "clamp_peak_force",
)
_CONTACT_COLUMNS = (
    "policy",
    "speed",
    "seed",
    "time",
    "obstacle",
    "contact_class",
    "link",
    "pad",
    "contact_speed",
    "m_r_used",
    "mass_model",
    "estimated_force",
    "reaction",
    "measured_force",
)
_SUMMARY_COLUMNS = (
    "policy",
    "speed",
    "metric",
    "mean",
    "median",
    "p25",
    "p75",
    "min",
    "max",
    "count",
)
_TABLE1_COLUMNS = ("speed", "theta_deg", "delta_t_ms", "force")


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


def _write_csv(path, comment: str, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def emit_report(
    records: Sequence[ExperimentRecord],
    summary: SummaryTable,
    out_dir,
    *,
    table: Optional[dict[tuple[float, float], float]] = None,
) -> dict[str, str]:
    """Write records.csv, contacts.csv, summary.csv, and table1.csv.

    Every file starts with a ``#`` comment line documenting its columns.
    Returns the written paths keyed by file stem.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    rows = [
        (
            r.policy.value,
            r.speed,
            r.seed,
            r.task_time,
            r.stop_count,
            r.success,
            len(r.contacts),
            r.clamp_peak_force,
        )
        for r in records
    ]
    paths["records"] = os.path.join(out_dir, "records.csv")
    _write_csv(
        paths["records"],
        "one row per repetition: policy, commanded speed [m/s], seed, task time [s], "
        "stop count, success flag, contact count, peak clamp force [N]",
        _RECORD_COLUMNS,
        rows,
    )

    crows = []
    for r in records:
        for c in r.contacts:
            crows.append(
                (
                    r.policy.value,
                    r.speed,
                    r.seed,
                    c.time,
                    c.obstacle,
                    c.contact_class.value,
                    c.link,
                    c.pad,
                    c.speed,
                    c.m_r_used,
                    c.mass_model.value,
                    c.estimated_force,
                    c.reaction.value,
                    c.measured_force,
                )
            )
    paths["contacts"] = os.path.join(out_dir, "contacts.csv")
    _write_csv(
        paths["contacts"],
        "one row per detected contact: repetition keys, detection time [s], obstacle, "
        "contact class, isolated link/pad, contact point speed [m/s], robot mass term [kg], "
        "mass model, estimated force [N], reaction, measured clamp force peak [N] "
        "(empty for transient contacts)",
        _CONTACT_COLUMNS,
        crows,
    )

    srows = [
        (
            row.policy.value,
            row.speed,
            row.metric,
            row.mean,
            row.median,
            row.p25,
            row.p75,
            row.min,
            row.max,
            row.count,
        )
        for row in summary.rows
    ]
    paths["summary"] = os.path.join(out_dir, "summary.csv")
    _write_csv(
        paths["summary"],
        "per (policy, speed) statistics over repetitions; percentiles use linear interpolation",
        _SUMMARY_COLUMNS,
        srows,
    )

    if table is None:
        table = make_table1()
    trows = [
        (speed, math.degrees(DEFAULT_TABLE_ANGLES.get(speed, math.nan)), dt * 1000.0, force)
        for (speed, dt), force in sorted(table.items())
    ]
    paths["table1"] = os.path.join(out_dir, "table1.csv")
    _write_csv(
        paths["table1"],
        "average transient contact force [N] from the pendulum swing model, "
        "per approach speed [m/s] and contact duration [ms]",
        _TABLE1_COLUMNS,
        trows,
    )
    return paths


def read_csv_rows(path) -> list[dict]:
    """Read back a report CSV (skipping the comment line) as dicts."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        return list(csv.DictReader(fh))
