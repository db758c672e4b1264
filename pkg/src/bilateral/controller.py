"""Four-channel bilateral control law and the comparison modes built on it.

Per arm and per tick::

    a      = Kp (q_des - q) + Kd (qd_des - qd_hat) + Kf (tau_des + tau_hat)
    tau_u  = M a - tau_hat             (the - tau_hat is the compensation term)
    tau_u  = clamp so that |tau_u + h| <= tau_limit
    tau_ref = tau_u + h(q, qd_hat)
    a      = M^-1 (tau_u + tau_hat)    (fed to the observer next tick)

``*_des`` are the other arm's angle, velocity and estimated external torque.
``Kf = kf * (2 M)^-1`` uses each arm's own inertia, which makes the operator
feel the inertia of both arms together.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics as dyn
from ._kernels import spd_inverse
from .errors import Fault, UsageError, require_finite
from .observer import ObserverConfig, ObserverState, observer_update
from .robots import CRANE_X7_FIXED_INERTIA


class TeleopMode(enum.Enum):
    UNILATERAL = "Unilateral"
    SYMMETRIC_POSITION = "SymmetricPosition"
    FORCE_FEEDBACK = "ForceFeedback"
    FOURCH_FIXED_INERTIA = "FourChFixedInertia"
    FOURCH_NO_CORIOLIS = "FourChNoCoriolis"
    FOURCH_PSEUDO_DIFF = "FourChPseudoDiff"
    FOURCH_PROPOSED = "FourChProposed"

    @classmethod
    def parse(cls, name: str) -> "TeleopMode":
        key = name.replace("-", "").replace("_", "").lower()
        for m in cls:
            if m.value.lower() == key or m.name.replace("_", "").lower() == key:
                return m
        raise UsageError(f"unknown mode {name!r}; choose from "
                         + ", ".join(m.value for m in cls))


# table order of the comparison
MODES = tuple(TeleopMode)


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and feature switches of one arm.

    ``kf`` scales the force gain ``(2 M)^-1``; 0 removes the force channel.
    ``inertia`` is ``"model"`` (M from the identified dynamics) or ``"fixed"``
    (``fixed_inertia_diag``); the same inertia feeds the observer.
    """

    kp: float = 800.0
    kd: float = 40.0
    kf: float = 1.0
    compensate_ext: bool = True
    compensate_coriolis: bool = True
    velocity_source: str = "observer"
    inertia: str = "model"
    fixed_inertia_diag: np.ndarray | None = None
    diagonal_inertia: bool = False
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    mode: TeleopMode = TeleopMode.FOURCH_PROPOSED

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0 or self.kf < 0:
            raise UsageError("kp, kd and kf must be non-negative")
        if self.velocity_source not in ("observer", "pseudo_diff"):
            raise UsageError(f"velocity_source must be observer or pseudo_diff, "
                             f"got {self.velocity_source!r}")
        if self.inertia not in ("model", "fixed"):
            raise UsageError(f"inertia must be model or fixed, got {self.inertia!r}")
        if self.inertia == "fixed":
            d = self.fixed_inertia_diag
            if d is None or not np.all(np.asarray(d, float) > 0):
                raise UsageError("fixed inertia needs a strictly positive diagonal")
            object.__setattr__(self, "fixed_inertia_diag", np.asarray(d, float))

    @property
    def dt(self) -> float:
        return self.observer.dt


@dataclass(frozen=True)
class PeerSnapshot:
    theta: np.ndarray
    theta_dot: np.ndarray
    tau: np.ndarray
    timestamp: float = 0.0


@dataclass
class ControlOutput:
    tau_ref: np.ndarray
    accel_ref: np.ndarray
    tau_u: np.ndarray
    saturated: np.ndarray


def transform_plus_minus(x_l, x_f):
    """(difference, average) coordinates of a leader/follower pair."""
    x_l, x_f = np.asarray(x_l, float), np.asarray(x_f, float)
    if x_l.shape != x_f.shape:
        raise UsageError(f"shape mismatch {x_l.shape} vs {x_f.shape}")
    return x_l - x_f, 0.5 * (x_l + x_f)


def inverse_plus_minus(x_minus, x_plus):
    x_minus, x_plus = np.asarray(x_minus, float), np.asarray(x_plus, float)
    if x_minus.shape != x_plus.shape:
        raise UsageError(f"shape mismatch {x_minus.shape} vs {x_plus.shape}")
    return x_plus + 0.5 * x_minus, x_plus - 0.5 * x_minus


def transform_force(tau_l, tau_f):
    """Forces dual to :func:`transform_plus_minus` (power preserving)."""
    tau_l, tau_f = np.asarray(tau_l, float), np.asarray(tau_f, float)
    if tau_l.shape != tau_f.shape:
        raise UsageError(f"shape mismatch {tau_l.shape} vs {tau_f.shape}")
    return 0.5 * (tau_l - tau_f), tau_l + tau_f


def mode_gains(mode: TeleopMode, base: ControllerConfig, side: str) -> ControllerConfig:
    """Effective per-side configuration of a comparison mode.

    Every mode starts from ``base`` and zeroes or swaps terms; ``base`` itself
    is expected to describe the full method.
    """
    if side not in ("leader", "follower"):
        raise UsageError(f"side must be leader or follower, got {side!r}")
    leader = side == "leader"
    cfg = replace(base, mode=mode)
    if mode is TeleopMode.UNILATERAL:
        if leader:
            return replace(cfg, kp=0.0, kd=0.0, kf=0.0, compensate_ext=False)
        return replace(cfg, kf=0.0, compensate_ext=False)
    if mode is TeleopMode.SYMMETRIC_POSITION:
        return replace(cfg, kf=0.0, compensate_ext=False)
    if mode is TeleopMode.FORCE_FEEDBACK:
        if leader:
            return replace(cfg, kp=0.0, kd=0.0)
        return replace(cfg, kf=0.0, compensate_ext=False)
    if mode is TeleopMode.FOURCH_FIXED_INERTIA:
        diag = base.fixed_inertia_diag
        return replace(cfg, inertia="fixed",
                       fixed_inertia_diag=CRANE_X7_FIXED_INERTIA if diag is None else diag)
    if mode is TeleopMode.FOURCH_NO_CORIOLIS:
        return replace(cfg, compensate_coriolis=False)
    if mode is TeleopMode.FOURCH_PSEUDO_DIFF:
        return replace(cfg, velocity_source="pseudo_diff")
    return cfg


def apply_torque_limit(tau_u, h, tau_limit):
    """Clamp ``tau_u`` so that ``tau_u + h`` stays within +-``tau_limit``."""
    tau_u = np.array(tau_u, dtype=float)
    lim = np.asarray(tau_limit, float)
    hi = tau_u + h > lim
    lo = tau_u + h < -lim
    tau_u[hi] = lim[hi] - h[hi]
    tau_u[lo] = -lim[lo] - h[lo]
    return tau_u


def controller_inertia(cfg: ControllerConfig, model: dyn.ChainModel, theta) -> np.ndarray:
    if cfg.inertia == "fixed":
        d = cfg.fixed_inertia_diag
        if d.shape != (model.n_joints,):
            raise UsageError(f"fixed inertia diagonal needs {model.n_joints} entries")
        return np.diag(d)
    M = dyn.mass_matrix(model, theta)
    return np.diag(np.diag(M)) if cfg.diagonal_inertia else M


def compensation_torque(cfg: ControllerConfig, model: dyn.ChainModel, theta, theta_dot):
    """h~(q, qd_hat); without the Coriolis part it is g(q) + D qd_hat."""
    if cfg.compensate_coriolis:
        return dyn.bias_forces(model, theta, theta_dot)
    return dyn.gravity_torque(model, theta) + model.friction() * theta_dot


def force_gain(cfg: ControllerConfig, M_inv) -> np.ndarray:
    return 0.5 * cfg.kf * M_inv


def acceleration_reference(cfg: ControllerConfig, peer: PeerSnapshot, theta, theta_dot,
                           tau_hat, Kf):
    return (cfg.kp * (peer.theta - theta) + cfg.kd * (peer.theta_dot - theta_dot)
            + Kf @ (peer.tau + tau_hat))


def control_tick(cfg: ControllerConfig, model: dyn.ChainModel, peer: PeerSnapshot,
                 theta, theta_dot, tau_hat, M=None, M_inv=None, h=None) -> ControlOutput:
    """One evaluation of the control law; ``M``/``M_inv``/``h`` may be precomputed."""
    theta = np.asarray(theta, float)
    if M is None:
        M = controller_inertia(cfg, model, theta)
    if M_inv is None:
        M_inv = np.linalg.inv(M)
    if h is None:
        h = compensation_torque(cfg, model, theta, theta_dot)
    a = acceleration_reference(cfg, peer, theta, theta_dot, tau_hat, force_gain(cfg, M_inv))
    tau_u = M @ a
    if cfg.compensate_ext:
        tau_u = tau_u - tau_hat
    lim = model.torque_limit
    saturated = (tau_u + h > lim) | (tau_u + h < -lim)
    if saturated.any():
        tau_u = apply_torque_limit(tau_u, h, lim)
    tau_ref = tau_u + h
    accel_ref = M_inv @ (tau_u + tau_hat)
    require_finite("tau_ref", tau_ref)
    return ControlOutput(tau_ref, accel_ref, tau_u, saturated)


class ArmController:
    """Observer plus control law for one arm, holding all per-arm memory."""

    def __init__(self, model: dyn.ChainModel, cfg: ControllerConfig, theta0,
                 settle: bool = True):
        self.model = model
        self.cfg = cfg
        n = model.n_joints
        theta0 = np.asarray(theta0, float)
        if theta0.shape != (n,):
            raise UsageError(f"initial angle needs {n} entries")
        self.obs = ObserverState.create(theta0, cfg.observer, settle)
        self.tau_u = np.zeros(n)
        self.accel_ref = np.zeros(n)
        self.theta = theta0.copy()
        self.theta_dot = np.zeros(n)
        self.tau_hat = np.zeros(n)
        self.qd_hat = np.zeros(n)
        self._M = self._M_inv = None

    def observe(self, theta):
        """Observer part of the tick; returns (velocity used for control, tau_hat)."""
        theta = np.asarray(theta, float)
        M = controller_inertia(self.cfg, self.model, theta)
        M_inv = np.empty_like(M)
        if not spd_inverse(M, M_inv):
            raise Fault("controller inertia", reason="lost positive definiteness")
        self.qd_hat, self.tau_hat = observer_update(
            self.cfg.observer, self.obs, theta, self.tau_u, self.accel_ref, M, M_inv)
        self.theta = theta
        self.theta_dot = (self.obs.pdiff_fob if self.cfg.velocity_source == "pseudo_diff"
                          else self.qd_hat)
        self._M, self._M_inv = M, M_inv
        return self.theta_dot, self.tau_hat

    def snapshot(self, t: float = 0.0) -> PeerSnapshot:
        return PeerSnapshot(self.theta, self.theta_dot, self.tau_hat, t)

    def command(self, peer: PeerSnapshot) -> ControlOutput:
        out = control_tick(self.cfg, self.model, peer, self.theta, self.theta_dot,
                           self.tau_hat, self._M, self._M_inv)
        self.tau_u = out.tau_u
        self.accel_ref = out.accel_ref
        return out
