"""Ready-made chains: the 8-axis low-cost arm used by the comparison harness
and small textbook chains used as test fixtures."""

from __future__ import annotations

import numpy as np

from .dynamics import ChainModel, DHRow, ParamVector

HALF_PI = np.pi / 2

# Identified base parameters of the 7-axis arm (regrouped, SYMORO naming).
CRANE_X7_PHI = {
    "MX2": -0.0095784, "MYR2": -0.2140494,
    "MX3": 0.0164795, "MYR3": -0.0015841,
    "MX4": 0.0112601, "MYR4": -0.1269891,
    "MX5": 0.0011854, "MYR5": 0.0006837,
    "MX6": -0.0049209, "MYR6": -0.0051238,
    "MX7": 0.0003040, "MZ7": 0.0002715,
    "ZZR1": 0.0040049,
    "XXR2": 0.0447190, "ZZR2": 0.0695762,
    "XXR3": 0.0018078, "ZZR3": 0.0010000,
    "XXR4": 0.0204158, "ZZR4": 0.0160292,
    "XXR5": -0.0006468, "ZZR5": 0.0001000,
    "XXR6": 0.0008617, "ZZR6": 0.0011530,
    "XXR7": -0.0007504, "ZZ7": 0.0001000,
    "IA3": 0.0056659, "IA4": 0.0159844, "IA5": 0.0044899,
    "IA6": 0.0054869, "IA7": 0.0042852,
    "FV1": 0.0510939, "FV2": 0.0888340, "FV3": 0.0214482, "FV4": 0.0761949,
    "FV5": 0.0290511, "FV6": 0.0400000, "FV7": 0.0299360,
    # gripper axis: reflected inertia only (value of its fixed-inertia entry)
    "IA8": 0.006891,
}

# Constant inertia used by the fixed-inertia comparison mode (kg m^2).
CRANE_X7_FIXED_INERTIA = np.array(
    [0.012258, 0.112990, 0.012028, 0.040000, 0.005676, 0.006600, 0.006281, 0.006891])

# Stall torques of the XM430-W350 / XM540-W270 actuators (N m).
CRANE_X7_TORQUE_LIMIT = np.array([4.1, 10.6, 4.1, 4.1, 4.1, 4.1, 4.1, 4.1])

# Shoulder-elbow and elbow-wrist distances are 0.25 m; axes alternate
# yaw / pitch from a vertical base axis. The gripper axis sits at the flange.
CRANE_X7_DH = (
    DHRow(alpha=0.0, d=0.0),
    DHRow(alpha=-HALF_PI, d=0.0),
    DHRow(alpha=HALF_PI, d=0.0, r=0.25),
    DHRow(alpha=-HALF_PI, d=0.0),
    DHRow(alpha=HALF_PI, d=0.0, r=0.25),
    DHRow(alpha=-HALF_PI, d=0.0),
    DHRow(alpha=HALF_PI, d=0.0),
    DHRow(alpha=-HALF_PI, d=0.0, r=0.05),
)

# Mechanical joint ranges (rad); the gripper axis is inertia-only.
CRANE_X7_JOINT_RANGE = np.array([
    [-2.97, 2.97], [-1.57, 1.57], [-2.97, 2.97], [-2.80, 0.0],
    [-2.97, 2.97], [-1.57, 1.57], [-2.97, 2.97], [-0.1, 1.0]])

# A comfortable, well-conditioned working posture (rad).
CRANE_X7_HOME = np.array([0.0, 0.6, 0.0, -1.6, 0.0, -0.6, 0.0, 0.0])


def crane_x7() -> ChainModel:
    return ChainModel(CRANE_X7_DH, ParamVector.from_mapping(CRANE_X7_PHI),
                      gravity=np.array([0.0, 0.0, -9.81]),
                      torque_limit=CRANE_X7_TORQUE_LIMIT, name="crane_x7",
                      joint_range=CRANE_X7_JOINT_RANGE)


def link_params(j: int, mass: float, com, inertia_c, ia: float = 0.0,
                fv: float = 0.0) -> dict[str, float]:
    """Standard parameters of link ``j`` (1-based) from physical quantities.

    ``com`` is the centre of mass in the link frame, ``inertia_c`` the 3x3
    inertia about the centre of mass; the result is referred to the frame
    origin by the parallel-axis theorem.
    """
    c = np.asarray(com, float)
    Ic = np.asarray(inertia_c, float)
    J = Ic + mass * (c @ c * np.eye(3) - np.outer(c, c))
    out = {
        f"XX{j}": J[0, 0], f"XY{j}": J[0, 1], f"XZ{j}": J[0, 2],
        f"YY{j}": J[1, 1], f"YZ{j}": J[1, 2], f"ZZ{j}": J[2, 2],
        f"MX{j}": mass * c[0], f"MY{j}": mass * c[1], f"MZ{j}": mass * c[2],
        f"M{j}": mass, f"IA{j}": ia, f"FV{j}": fv,
    }
    return {k: float(v) for k, v in out.items()}


def pendulum(mass: float = 1.0, length: float = 0.5, motor_inertia: float = 0.0,
             friction: float = 0.0, gravity: float = 9.81) -> ChainModel:
    """Point-mass pendulum hanging along +x0 at q = 0."""
    phi = link_params(1, mass, [length, 0, 0], np.zeros((3, 3)), motor_inertia, friction)
    return ChainModel((DHRow(0.0, 0.0),), ParamVector.from_mapping(phi),
                      gravity=np.array([gravity, 0.0, 0.0]), name="pendulum")


def planar_two_link(m1=1.0, m2=0.8, l1=0.4, lc1=0.2, lc2=0.15, I1=0.01, I2=0.008,
                    gravity: float = 9.81) -> ChainModel:
    """Planar arm in the x0-y0 plane, gravity along -y0."""
    phi = {}
    phi.update(link_params(1, m1, [lc1, 0, 0], np.diag([0, 0, I1])))
    phi.update(link_params(2, m2, [lc2, 0, 0], np.diag([0, 0, I2])))
    links = (DHRow(0.0, 0.0), DHRow(0.0, l1))
    return ChainModel(links, ParamVector.from_mapping(phi),
                      gravity=np.array([0.0, -gravity, 0.0]), name="planar2")


def spatial_three_link(friction: bool = True) -> ChainModel:
    """Non-planar 3-axis chain with full inertia tensors and offsets."""
    rng = np.random.default_rng(7)
    links = (DHRow(0.0, 0.0, 0.0, 0.1),
             DHRow(-HALF_PI, 0.05, 0.3, 0.02),
             DHRow(HALF_PI * 0.7, 0.3, -0.2, 0.1))
    phi = {}
    for j, (m, com) in enumerate([(2.0, [0.02, -0.01, 0.05]),
                                   (1.5, [0.12, 0.01, -0.02]),
                                   (0.7, [0.08, 0.03, 0.01])], start=1):
        A = rng.normal(size=(3, 3)) * 0.01
        Ic = A @ A.T + np.eye(3) * 0.002
        phi.update(link_params(j, m, com, Ic, ia=0.001 * j,
                               fv=0.05 * j if friction else 0.0))
    return ChainModel(links, ParamVector.from_mapping(phi),
                      gravity=np.array([0.0, 0.0, -9.81]), name="spatial3")
