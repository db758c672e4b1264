"""Twin-arm teleoperation simulator.

Each 1 ms control tick: read (optionally quantised) encoders, update both
observers, exchange peer snapshots, run both control laws, then integrate both
plants over ten 0.1 ms substeps with the commanded torque held and the hand
and wall torques re-evaluated every substep.

The leader is pushed by a scripted impedance "hand"; the follower can meet
one-sided spring-damper walls. Both arms also have stiff mechanical stops at
their joint ranges.
"""

from __future__ import annotations

import csv
import gc
import queue
import sys
import threading
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels as K
from . import dynamics as dyn
from .controller import ArmController, ControllerConfig, TeleopMode, mode_gains
from .errors import Fault, UsageError
from .robots import CRANE_X7_HOME

SIGNALS = ("q", "qd", "qdhat", "tau_ref", "tau_ext", "tau_exthat", "tau_u", "sat")
ARMS = ("l", "f")


# --- scenario description ------------------------------------------------

@dataclass(frozen=True)
class OperatorProfile:
    """Scripted hand on the leader.

    ``kind="swing"`` moves ``joint`` by +-``amplitude`` around the start pose,
    ``repetitions`` full periods, each shaped ``tanh(b sin)/tanh(b)`` so the
    motion dwells near the ends like a fast human swing. ``kind="waypoints"``
    follows a clamped cubic spline through ``waypoints`` = ((t, offsets), ...)
    where ``offsets`` are relative to the start pose, one per entry of
    ``joints`` (default: ``joint``).

    The hand drives the moving joints with ``stiffness``/``damping`` and grips
    every other joint at its start angle with ``hold_stiffness``/``hold_damping``.
    Those spring-damper torques are clamped to +-``max_torque``. The operator's
    limb adds ``inertia`` to the moving joints; the plant solves it together
    with the arm and counts its reaction as part of the hand torque.
    """

    kind: str = "swing"
    joint: int = 0
    amplitude: float = np.pi / 4
    period: float = 1.0
    repetitions: int = 10
    sharpness: float = 3.0
    start: float = 0.5
    waypoints: tuple = ()
    joints: tuple | None = None
    stiffness: float = 40.0
    damping: float = 1.0
    max_torque: float = 1.5
    inertia: float = 0.02
    hold_stiffness: float = 5.0
    hold_damping: float = 0.2
    jitter: float = 0.0

    def __post_init__(self):
        if self.kind not in ("swing", "waypoints"):
            raise UsageError(f"operator kind must be swing or waypoints, got {self.kind!r}")
        if min(self.stiffness, self.damping, self.max_torque, self.inertia,
               self.hold_stiffness, self.hold_damping) < 0:
            raise UsageError("hand impedance must be non-negative")
        if self.kind == "swing" and (self.period <= 0 or self.repetitions < 0):
            raise UsageError("swing needs a positive period and repetitions >= 0")
        if self.kind == "waypoints":
            ts = [w[0] for w in self.waypoints]
            if len(ts) < 2 or np.any(np.diff(ts) <= 0):
                raise UsageError("waypoints need at least two strictly increasing times")

    @property
    def hand_joints(self) -> tuple:
        return tuple(self.joints) if self.joints is not None else (self.joint,)

    def targets(self, t, q0, rng: np.random.Generator | None = None):
        """Target angles, velocities and accelerations, each (len(t), n)."""
        t = np.asarray(t, float)
        q0 = np.asarray(q0, float)
        qt = np.tile(q0, (len(t), 1))
        vt = np.zeros_like(qt)
        at = np.zeros_like(qt)
        if self.kind == "swing":
            b = self.sharpness
            w = 2 * np.pi / self.period
            reps = self.repetitions
            amp = np.full(max(reps, 1), self.amplitude)
            if self.jitter and rng is not None:
                amp = amp * (1 + self.jitter * rng.uniform(-1, 1, size=len(amp)))
            tau = t - self.start
            on = (tau >= 0) & (tau < reps * self.period)
            rep = np.clip((tau // self.period).astype(int), 0, len(amp) - 1)
            a = np.where(on, amp[rep], 0.0)
            x = b * np.sin(w * tau)
            shape = np.tanh(x) / np.tanh(b)
            g = b * w / np.tanh(b) / np.cosh(x) ** 2
            dshape = g * np.cos(w * tau)
            ddshape = -g * w * (np.sin(w * tau) + 2 * b * np.cos(w * tau) ** 2 * np.tanh(x))
            qt[:, self.joint] += a * shape
            vt[:, self.joint] += a * dshape
            at[:, self.joint] += a * ddshape
        else:
            ts = np.array([w[0] for w in self.waypoints], float)
            offs = np.array([np.atleast_1d(w[1]) for w in self.waypoints], float)
            spline = CubicSpline(ts, offs, axis=0, bc_type="clamped")
            tc = np.clip(t, ts[0], ts[-1])
            p, v, acc = spline(tc), spline(tc, 1), spline(tc, 2)
            outside = (t < ts[0]) | (t > ts[-1])
            v[outside] = 0.0
            acc[outside] = 0.0
            for c, j in enumerate(self.hand_joints):
                qt[:, j] += p[:, c]
                vt[:, j] += v[:, c]
                at[:, j] += acc[:, c]
        return qt, vt, at

    def impedance(self, n: int):
        """Per-joint (stiffness, damping, limb inertia, torque clamp)."""
        k = np.full(n, self.hold_stiffness)
        d = np.full(n, self.hold_damping)
        m = np.zeros(n)
        for j in self.hand_joints:
            if not 0 <= j < n:
                raise UsageError(f"hand joint {j} outside 0..{n - 1}")
            k[j], d[j], m[j] = self.stiffness, self.damping, self.inertia
        return k, d, m, np.full(n, self.max_torque)


@dataclass(frozen=True)
class Wall:
    """One-sided wall on a follower joint at absolute angle ``position``.

    ``side=+1`` blocks motion above ``position``, ``-1`` below it.
    """

    joint: int
    position: float
    stiffness: float = 20.0
    damping: float = 0.5
    side: int = 1

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0:
            raise UsageError("wall stiffness and damping must be non-negative")
        if self.side not in (-1, 1):
            raise UsageError("wall side must be +1 or -1")


@dataclass(frozen=True)
class Scenario:
    duration: float = 11.0
    operator: OperatorProfile = field(default_factory=OperatorProfile)
    walls: tuple = ()
    encoder_quantization: bool = False
    encoder_bits: int = 12
    encoder_noise: float = 0.0
    seed: int = 0
    initial_pose: tuple | None = None
    dt: float = 1e-3
    substeps: int = 10
    stop_stiffness: float = 200.0
    stop_damping: float = 2.0

    def __post_init__(self):
        if not self.duration > 0:
            raise UsageError(f"duration must be positive, got {self.duration}")
        if self.substeps < 1 or not 0 < self.dt / self.substeps <= 1e-3:
            raise UsageError("physics step must lie in (0, 1 ms]")
        if self.encoder_noise < 0:
            raise UsageError("encoder noise must be non-negative")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt))

    def start_pose(self, model: dyn.ChainModel) -> np.ndarray:
        if self.initial_pose is not None:
            q0 = np.asarray(self.initial_pose, float)
            if q0.shape != (model.n_joints,):
                raise UsageError(f"initial_pose needs {model.n_joints} entries")
            return q0
        if model.name == "crane_x7":
            return CRANE_X7_HOME.copy()
        return np.clip(np.zeros(model.n_joints), *model.joint_range.T)


def default_swing() -> Scenario:
    return Scenario()


def wall_contact(model: dyn.ChainModel | None = None, depth: float = 0.3,
                 duration: float = 5.0) -> Scenario:
    """Leader pushes joint 1 toward a follower wall 0.2 rad away and holds."""
    q0 = CRANE_X7_HOME if model is None else Scenario().start_pose(model)
    wall = Wall(joint=0, position=float(q0[0]) + 0.2)
    op = OperatorProfile(kind="waypoints", joint=0,
                         waypoints=((0.5, 0.0), (2.0, 0.2 + depth), (duration, 0.2 + depth)),
                         stiffness=10.0, damping=0.5, max_torque=3.0)
    return Scenario(duration=duration, operator=op, walls=(wall,))


def quantize(theta, bits: int = 12):
    step = 2 * np.pi / 2 ** bits
    return np.round(np.asarray(theta) / step) * step


def operator_step(profile: OperatorProfile, t: float, theta_l, theta_dot_l, q0):
    """Spring-damper part of the hand torque on the leader at time ``t``."""
    theta_l = np.asarray(theta_l, float)
    qt, vt, _ = profile.targets(np.array([t]), q0)
    k, d, _, m = profile.impedance(theta_l.shape[0])
    return np.clip(k * (qt[0] - theta_l) + d * (vt[0] - theta_dot_l), -m, m)


def _wall_arrays(walls, n: int):
    pos, k, d, side = np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n)
    for w in walls:
        if not 0 <= w.joint < n:
            raise UsageError(f"wall joint {w.joint} outside 0..{n - 1}")
        pos[w.joint], k[w.joint], d[w.joint], side[w.joint] = (
            w.position, w.stiffness, w.damping, w.side)
    return pos, k, d, side


def environment_step(walls, theta_f, theta_dot_f):
    """Wall torque on the follower."""
    theta_f = np.asarray(theta_f, float)
    theta_dot_f = np.asarray(theta_dot_f, float)
    out = np.zeros_like(theta_f)
    K.contact_torque(theta_f, theta_dot_f, *_wall_arrays(walls, theta_f.shape[0]), out)
    return out


# --- telemetry -----------------------------------------------------------

def telemetry_columns(n: int) -> list[str]:
    cols = ["t"]
    for arm in ARMS:
        for sig in SIGNALS:
            cols += [f"{arm}_{sig}{i + 1}" for i in range(n)]
    return cols


@dataclass
class TelemetryLog:
    n_joints: int
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return telemetry_columns(self.n_joints)

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def __len__(self) -> int:
        return self.data.shape[0]

    def signal(self, arm: str, name: str) -> np.ndarray:
        if arm not in ARMS or name not in SIGNALS:
            raise UsageError(f"unknown signal {arm}_{name}")
        n = self.n_joints
        start = 1 + (ARMS.index(arm) * len(SIGNALS) + SIGNALS.index(name)) * n
        return self.data[:, start:start + n]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.data:
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "TelemetryLog":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as e:
            raise UsageError(f"{path}: {e.strerror}") from None
        if not rows:
            raise UsageError(f"{path}: empty telemetry file")
        header = rows[0]
        n = (len(header) - 1) // (2 * len(SIGNALS))
        if n < 1 or header != telemetry_columns(n):
            raise UsageError(f"{path}: header does not match the telemetry layout")
        try:
            data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
        except ValueError as e:
            raise UsageError(f"{path}: {e}") from None
        if data.size == 0:
            data = data.reshape(0, len(header))
        if data.shape[1] != len(header):
            raise UsageError(f"{path}: ragged rows")
        return cls(n, data)


# --- lockstep session ----------------------------------------------------

def mode_configs(mode: TeleopMode, base: ControllerConfig | None = None):
    base = base or ControllerConfig()
    return mode_gains(mode, base, "leader"), mode_gains(mode, base, "follower")


class _Plant:
    """True dynamics of one arm plus its external-torque sources."""

    def __init__(self, model: dyn.ChainModel, q0, scenario: Scenario, hand=None, walls=()):
        n = model.n_joints
        self.model = model
        self.args = model.kernel_args()
        self.q = np.array(q0, float)
        self.qd = np.zeros(n)
        self.dt = scenario.dt / scenario.substeps
        self.n_sub = scenario.substeps
        self.hand = hand or (np.zeros(n),) * 4
        self.walls = _wall_arrays(walls, n)
        lo, hi = model.joint_range.T
        self.stops = (lo.copy(), hi.copy(), np.full(n, scenario.stop_stiffness),
                      np.full(n, scenario.stop_damping))
        self.wall_work = 0.0
        self.hand_work = 0.0

    def step(self, tau_cmd, hand_q, hand_v, hand_a, tick: int):
        a, d, t0, r, P = self.args
        q, qd, ext0, ww, wh, ok = K.physics_tick(
            a, d, t0, r, P, self.model.gravity, self.q, self.qd, tau_cmd, self.dt,
            hand_q, hand_v, hand_a, *self.hand, *self.walls, *self.stops)
        if not ok:
            raise Fault("mass matrix", tick, "lost positive definiteness")
        if not (np.isfinite(q).all() and np.isfinite(qd).all()):
            raise Fault("plant state", tick)
        self.q, self.qd = q, qd
        self.wall_work += ww
        self.hand_work += wh
        return ext0


class _Encoder:
    def __init__(self, scenario: Scenario, rng: np.random.Generator):
        self.quant = scenario.encoder_quantization
        self.bits = scenario.encoder_bits
        self.noise = scenario.encoder_noise
        self.rng = rng

    def read(self, q):
        if self.noise:
            q = q + self.rng.normal(scale=self.noise, size=q.shape)
        return quantize(q, self.bits) if self.quant else q.copy()


def _hand_schedule(scenario: Scenario, q0, n: int, rng):
    """Hand targets at every physics substep, each (ticks + 1, substeps, n)."""
    N, S = scenario.n_ticks + 1, scenario.substeps
    t = np.arange(N * S) * (scenario.dt / S)
    return tuple(x.reshape(N, S, n) for x in scenario.operator.targets(t, q0, rng))


def run_session(model_l: dyn.ChainModel, model_f: dyn.ChainModel, cfg_l: ControllerConfig,
                cfg_f: ControllerConfig, scenario: Scenario,
                ctrl_model_l: dyn.ChainModel | None = None,
                ctrl_model_f: dyn.ChainModel | None = None) -> TelemetryLog:
    """Deterministic lockstep session; ``ctrl_model_*`` default to the plant models."""
    n = model_l.n_joints
    if model_f.n_joints != n:
        raise UsageError("leader and follower need the same number of joints")
    for c in (cfg_l, cfg_f):
        if abs(c.dt - scenario.dt) > 1e-15:
            raise UsageError("controller and scenario sampling periods differ")
    rng = np.random.default_rng(scenario.seed)
    q0 = scenario.start_pose(model_l)
    hand = _hand_schedule(scenario, q0, n, rng)
    plant_l = _Plant(model_l, q0, scenario, hand=scenario.operator.impedance(n))
    plant_f = _Plant(model_f, q0, scenario, walls=scenario.walls)
    enc_l, enc_f = _Encoder(scenario, rng), _Encoder(scenario, rng)
    arm_l = ArmController(ctrl_model_l or model_l, cfg_l, enc_l.read(plant_l.q))
    arm_f = ArmController(ctrl_model_f or model_f, cfg_f, enc_f.read(plant_f.q))

    N = scenario.n_ticks
    S = len(SIGNALS)
    data = np.empty((N + 1, 1 + 2 * S * n))
    zeros_sched = np.zeros((scenario.substeps, n))
    for k in range(N + 1):
        t = k * scenario.dt
        try:
            arm_l.observe(enc_l.read(plant_l.q))
            arm_f.observe(enc_f.read(plant_f.q))
            snap_l, snap_f = arm_l.snapshot(t), arm_f.snapshot(t)
            out_l = arm_l.command(snap_f)
            out_f = arm_f.command(snap_l)
        except Fault as e:
            raise e.at(k) from None
        qs = (plant_l.q, plant_f.q, plant_l.qd, plant_f.qd)
        # the step after the last row only supplies that row's external torque
        ext_l = plant_l.step(out_l.tau_ref, hand[0][k], hand[1][k], hand[2][k], k)
        ext_f = plant_f.step(out_f.tau_ref, zeros_sched, zeros_sched, zeros_sched, k)
        row = data[k]
        row[0] = t
        c = 1
        for arm, out, q, qd, ext in ((arm_l, out_l, qs[0], qs[2], ext_l),
                                     (arm_f, out_f, qs[1], qs[3], ext_f)):
            for sig in (q, qd, arm.theta_dot, out.tau_ref, ext, arm.tau_hat, out.tau_u,
                        out.saturated):
                row[c:c + n] = sig
                c += n
    meta = {"mode_l": cfg_l.mode.value, "mode_f": cfg_f.mode.value,
            "wall_work": plant_f.wall_work, "hand_work": plant_l.hand_work,
            "seed": scenario.seed, "quantized": scenario.encoder_quantization}
    return TelemetryLog(n, data, meta)


# --- concurrent session --------------------------------------------------

class Mailbox:
    """Latest-value slot: writers overwrite, readers never wait for data."""

    def __init__(self, value=None):
        self._lock = threading.Lock()
        self._value = value

    def put(self, value) -> None:
        with self._lock:
            self._value = value

    def get(self):
        with self._lock:
            return self._value


@dataclass
class ConcurrencyReport:
    ticks: int
    missed: dict
    overruns: int
    max_staleness: int
    mean_staleness: float

    @property
    def missed_fraction(self) -> float:
        return max(self.missed.values()) / max(self.ticks, 1)


class DeadlineMiss(Fault):
    def __init__(self, report: ConcurrencyReport, log: TelemetryLog):
        RuntimeError.__init__(
            self, f"{report.missed_fraction:.2%} of control ticks missed their deadline")
        self.signal = "deadline"
        self.tick = None
        self.reason = "missed deadlines"
        self.report = report
        self.log = log


def _sleep_until(deadline: float) -> None:
    while True:
        left = deadline - time.perf_counter()
        if left <= 0:
            return
        time.sleep(left - 2e-4 if left > 3e-4 else 0)


def _warm_up(model_l, model_f, cfg_l, cfg_f, scenario, q0):
    """Exercise every code path once so the first real ticks are not slow."""
    n = model_l.n_joints
    z = np.zeros((scenario.substeps, n))
    for model, cfg in ((model_l, cfg_l), (model_f, cfg_f)):
        ctrl = ArmController(model, cfg, q0)
        for _ in range(3):
            ctrl.observe(q0)
            out = ctrl.command(ctrl.snapshot())
        _Plant(model, q0, scenario).step(out.tau_ref, z + q0, z, z, 0)


def concurrent_session(model_l: dyn.ChainModel, model_f: dyn.ChainModel,
                       cfg_l: ControllerConfig, cfg_f: ControllerConfig, scenario: Scenario,
                       ctrl_model_l: dyn.ChainModel | None = None,
                       ctrl_model_f: dyn.ChainModel | None = None,
                       max_missed: float = 0.01, stale_warn: int = 5):
    """Run the two controllers and the physics as three real-time periodic threads.

    The physics thread owns both plants. At each 1 ms boundary it integrates the
    period that just ended with the latest command of each arm, then publishes
    the new encoder readings. A control thread answers every new reading: it
    updates its observer, publishes its snapshot, takes whatever peer snapshot
    is newest and posts a command stamped with the reading's tick. A command
    that is not back within one period of its reading's release counts as
    missed and the previous one is held; a physics thread running late waits
    for that window instead of consuming a stale command. Returns (log, report); raises :class:`DeadlineMiss` when more
    than ``max_missed`` of the ticks were missed.
    """
    n = model_l.n_joints
    if model_f.n_joints != n:
        raise UsageError("leader and follower need the same number of joints")
    rng = np.random.default_rng(scenario.seed)
    q0 = scenario.start_pose(model_l)
    hand = _hand_schedule(scenario, q0, n, rng)
    plants = {"l": _Plant(model_l, q0, scenario, hand=scenario.operator.impedance(n)),
              "f": _Plant(model_f, q0, scenario, walls=scenario.walls)}
    encoders = {a: _Encoder(scenario, rng) for a in ARMS}
    N = scenario.n_ticks
    S = len(SIGNALS)
    data = np.full((N + 1, 1 + 2 * S * n), np.nan)
    data[:, 0] = np.arange(N + 1) * scenario.dt

    def cols(arm, sig):
        start = 1 + (ARMS.index(arm) * S + SIGNALS.index(sig)) * n
        return slice(start, start + n)

    sensors = {a: Mailbox() for a in ARMS}
    commands = {a: Mailbox() for a in ARMS}
    snapshots = {a: Mailbox() for a in ARMS}
    stop = threading.Event()
    errors: queue.Queue = queue.Queue()
    staleness = []

    def control(arm, peer, model, cfg):
        try:
            ctrl = ArmController(model, cfg, sensors[arm].get()[1])
            last = -1
            while not stop.is_set():
                reading = sensors[arm].get()
                if reading[0] == last:
                    time.sleep(2e-5)
                    continue
                k, theta = reading
                last = k
                ctrl.observe(theta)
                snap = ctrl.snapshot(k * scenario.dt)
                snapshots[arm].put((k, snap))
                pk, psnap = snapshots[peer].get() or (k, snap)
                staleness.append(k - pk)
                out = ctrl.command(psnap)
                commands[arm].put((k, out.tau_ref))
                row = data[k]
                row[cols(arm, "qdhat")] = ctrl.theta_dot
                row[cols(arm, "tau_exthat")] = ctrl.tau_hat
                row[cols(arm, "tau_u")] = out.tau_u
                row[cols(arm, "sat")] = out.saturated
                if k == N:
                    return
        except Exception as e:  # surfaced by the physics thread
            errors.put(e)
            stop.set()

    _warm_up(model_l, model_f, cfg_l, cfg_f, scenario, q0)
    for a in ARMS:
        sensors[a].put((0, encoders[a].read(plants[a].q)))
    threads = [threading.Thread(target=control, args=("l", "f", ctrl_model_l or model_l, cfg_l),
                                daemon=True),
               threading.Thread(target=control, args=("f", "l", ctrl_model_f or model_f, cfg_f),
                                daemon=True)]
    missed = {a: 0 for a in ARMS}
    held = {a: np.zeros(n) for a in ARMS}
    overruns = 0
    zeros_sched = np.zeros((scenario.substeps, n))
    # the default 5 ms GIL switch interval is longer than a control period
    # and a collector pause can cost several of them
    switch = sys.getswitchinterval()
    sys.setswitchinterval(5e-5)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    for t in threads:
        t.start()
    t0 = time.perf_counter() + 0.05
    released = {a: t0 for a in ARMS}
    try:
        for k in range(N + 1):
            deadline = t0 + (k + 1) * scenario.dt
            _sleep_until(deadline)
            if time.perf_counter() > deadline + scenario.dt:
                overruns += 1
            if not errors.empty():
                raise errors.get()
            for a in ARMS:
                cmd = commands[a].get()
                while (cmd is None or cmd[0] != k) and (
                        time.perf_counter() < released[a] + scenario.dt):
                    time.sleep(2e-5)
                    cmd = commands[a].get()
                if cmd is not None and cmd[0] == k:
                    held[a] = cmd[1]
                else:
                    missed[a] += 1
                p = plants[a]
                row = data[k]
                row[cols(a, "q")] = p.q
                row[cols(a, "qd")] = p.qd
                row[cols(a, "tau_ref")] = held[a]
                sched = (hand[0][k], hand[1][k], hand[2][k]) if a == "l" else (zeros_sched,) * 3
                row[cols(a, "tau_ext")] = p.step(held[a], *sched, k)
                if k < N:
                    sensors[a].put((k + 1, encoders[a].read(p.q)))
                    released[a] = time.perf_counter()
    finally:
        stop.set()
        for t in threads:
            t.join(timeout=1.0)
        sys.setswitchinterval(switch)
        if gc_was_enabled:
            gc.enable()
    if not errors.empty():
        raise errors.get()

    # rows a late controller never wrote keep its previous values
    for j in range(1, N + 1):
        gap = np.isnan(data[j])
        data[j, gap] = data[j - 1, gap]
    data[np.isnan(data)] = 0.0
    st = np.asarray(staleness, float)
    report = ConcurrencyReport(N + 1, missed, overruns, int(st.max(initial=0)),
                               float(st.mean()) if st.size else 0.0)
    meta = {"mode_l": cfg_l.mode.value, "mode_f": cfg_f.mode.value,
            "wall_work": plants["f"].wall_work, "hand_work": plants["l"].hand_work,
            "seed": scenario.seed, "quantized": scenario.encoder_quantization,
            "concurrent": True, "missed": missed, "overruns": overruns,
            "max_staleness": report.max_staleness}
    log = TelemetryLog(n, data, meta)
    if report.max_staleness > stale_warn:
        import warnings
        warnings.warn(f"peer snapshots up to {report.max_staleness} ticks old")
    if report.missed_fraction > max_missed:
        raise DeadlineMiss(report, log)
    return log, report
