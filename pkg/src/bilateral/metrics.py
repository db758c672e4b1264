"""Tracking metrics of a teleoperation session and the comparison table."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .sim import TelemetryLog

TORQUE_NOTE = ("torque MAE = mean |tau_hat_ext,l - (-tau_hat_ext,f)|, i.e. the mismatch "
               "between the leader's estimate and the sign-reversed follower estimate")


@dataclass
class MetricsReport:
    """One session's MAE triple plus observer and saturation diagnostics.

    Angles and velocities in degrees, torques in N m. ``observer_rms`` holds
    per-arm RMS errors of the velocity and external-torque estimates against
    the simulator's ground truth.
    """

    angle_mae: float
    velocity_mae: float
    torque_mae: float
    observer_rms: dict = field(default_factory=dict)
    saturation: dict = field(default_factory=dict)
    n_rows: int = 0

    def row(self) -> tuple[float, float, float]:
        return self.angle_mae, self.velocity_mae, self.torque_mae


def compute_mae(log: TelemetryLog) -> MetricsReport:
    if len(log) == 0:
        raise UsageError("cannot compute metrics of an empty log")
    ql, qf = log.signal("l", "q"), log.signal("f", "q")
    vl, vf = log.signal("l", "qd"), log.signal("f", "qd")
    tl, tf = log.signal("l", "tau_exthat"), log.signal("f", "tau_exthat")
    obs = {}
    for arm in ("l", "f"):
        dv = log.signal(arm, "qdhat") - log.signal(arm, "qd")
        dt = log.signal(arm, "tau_exthat") - log.signal(arm, "tau_ext")
        obs[arm] = {"velocity": float(np.sqrt(np.mean(dv ** 2))),
                    "torque": float(np.sqrt(np.mean(dt ** 2)))}
    sat = {arm: int(log.signal(arm, "sat").sum()) for arm in ("l", "f")}
    return MetricsReport(
        angle_mae=float(np.degrees(np.mean(np.abs(ql - qf)))),
        velocity_mae=float(np.degrees(np.mean(np.abs(vl - vf)))),
        torque_mae=float(np.mean(np.abs(tl + tf))),
        observer_rms=obs, saturation=sat, n_rows=len(log))


COLUMNS = ("mode", "angle_mae_deg", "velocity_mae_deg_s", "torque_mae_Nm",
           "l_vel_rms", "f_vel_rms", "l_tau_rms", "f_tau_rms", "l_sat", "f_sat")


def table_rows(reports: dict) -> list[list]:
    rows = []
    for mode, r in reports.items():
        rows.append([mode, r.angle_mae, r.velocity_mae, r.torque_mae,
                     r.observer_rms["l"]["velocity"], r.observer_rms["f"]["velocity"],
                     r.observer_rms["l"]["torque"], r.observer_rms["f"]["torque"],
                     r.saturation["l"], r.saturation["f"]])
    return rows


def format_table(reports: dict) -> str:
    """Plain-text table in the layout of the comparison (one row per mode)."""
    lines = [f"# {TORQUE_NOTE}",
             f"{'mode':<20} {'angle [deg]':>12} {'velocity [deg/s]':>17} {'torque [N m]':>13}"]
    for mode, r in reports.items():
        lines.append(f"{mode:<20} {r.angle_mae:>12.3f} {r.velocity_mae:>17.3f} "
                     f"{r.torque_mae:>13.3f}")
    return "\n".join(lines) + "\n"


def write_csv(reports: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in table_rows(reports):
            w.writerow([row[0]] + [repr(float(x)) if isinstance(x, float) else x for x in row[1:]])
