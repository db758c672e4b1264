"""Time-series data files and SVG line plots of a telemetry log.

Three groups per arm: joint angles, estimated against true velocity, and
estimated against true external torque. The leader's torques are drawn with
reversed sign so that, in a good session, both arms' torque curves overlap.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import UsageError  # noqa: E402
from .sim import TelemetryLog  # noqa: E402

GROUPS = {
    "angle": (("q", "angle"),),
    "velocity": (("qd", "true"), ("qdhat", "estimate")),
    "torque": (("tau_ext", "true"), ("tau_exthat", "estimate")),
}
UNITS = {"angle": "rad", "velocity": "rad/s", "torque": "N m"}
ARM_NAMES = {"l": "leader", "f": "follower"}


def group_data(log: TelemetryLog, arm: str, group: str, joints):
    sign = -1.0 if (arm == "l" and group == "torque") else 1.0
    cols, names = [log.t], ["t"]
    for sig, label in GROUPS[group]:
        x = sign * log.signal(arm, sig)
        for j in joints:
            cols.append(x[:, j])
            names.append(f"{sig}{j + 1}")
    return np.column_stack(cols), names


def write_plots(log: TelemetryLog, out_dir, joints=None) -> list[Path]:
    """Write one ``.dat`` and one ``.svg`` per arm and group; returns the paths."""
    if len(log) == 0:
        raise UsageError("cannot plot an empty log")
    n = log.n_joints
    joints = list(range(n)) if joints is None else list(joints)
    if not joints or any(not 0 <= j < n for j in joints):
        raise UsageError(f"joints must lie in 1..{n}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for arm in ("l", "f"):
        for group, signals in GROUPS.items():
            data, names = group_data(log, arm, group, joints)
            stem = out / f"{ARM_NAMES[arm]}_{group}"
            np.savetxt(f"{stem}.dat", data, header=" ".join(names), fmt="%.10g")
            fig, ax = plt.subplots(figsize=(8, 3.2))
            for s, (sig, label) in enumerate(signals):
                for c, j in enumerate(joints):
                    ax.plot(data[:, 0], data[:, 1 + s * len(joints) + c],
                            color=colors[c % len(colors)], lw=0.8,
                            ls="-" if s == 0 else "--",
                            label=f"{label} J{j + 1}" if len(joints) <= 4 or s == 0 else None)
            flip = " (sign reversed)" if arm == "l" and group == "torque" else ""
            ax.set_title(f"{ARM_NAMES[arm]} {group}{flip}")
            ax.set_xlabel("time [s]")
            ax.set_ylabel(f"{group} [{UNITS[group]}]")
            ax.grid(alpha=0.3)
            ax.legend(fontsize=6, ncol=4, loc="upper right")
            fig.tight_layout()
            fig.savefig(f"{stem}.svg")
            plt.close(fig)
            written += [Path(f"{stem}.dat"), Path(f"{stem}.svg")]
    return written
