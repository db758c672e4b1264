"""Batch least-squares identification of the dynamic parameter vector.

Torque is linear in phi, ``tau = Y(q, qd, qdd) phi``. Samples are stacked into
one tall system that is solved through an SVD, which exposes the singular
values, the effective rank and which parameters the data cannot separate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import dynamics as dyn
from .errors import UsageError
from .sim import TelemetryLog


@dataclass(frozen=True)
class IdentSample:
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    tau: np.ndarray
    t: float = 0.0


@dataclass
class IdentData:
    """Time series for identification, one row per sample."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, float)
        arrs = [np.atleast_2d(np.asarray(a, float)) for a in (self.q, self.qd, self.qdd, self.tau)]
        shapes = {a.shape for a in arrs}
        if len(shapes) != 1 or arrs[0].shape[0] != self.t.shape[0]:
            raise UsageError("q, qd, qdd and tau need one row per time stamp")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise UsageError("time stamps must be strictly increasing")
        for a in arrs:
            if not np.isfinite(a).all():
                raise UsageError("identification data must be finite")
        self.q, self.qd, self.qdd, self.tau = arrs

    def __len__(self) -> int:
        return self.t.shape[0]

    def samples(self) -> list[IdentSample]:
        return [IdentSample(self.q[i], self.qd[i], self.qdd[i], self.tau[i], float(self.t[i]))
                for i in range(len(self))]


@dataclass
class Diagnostics:
    singular_values: np.ndarray
    rank: int
    residual_rms: float
    identifiable: np.ndarray
    names: tuple = ()
    tol: float = 0.0
    rows: int = 0

    def report(self) -> str:
        s = self.singular_values
        lines = [f"rows x params: {self.rows} x {s.size}",
                 f"effective rank: {self.rank} (tolerance {self.tol:.3g})",
                 f"condition (sigma_max / sigma_min kept): {s[0] / s[self.rank - 1]:.4g}"
                 if self.rank else "condition: undefined",
                 f"residual RMS: {self.residual_rms:.6g} N m",
                 "singular values: " + " ".join(f"{v:.4g}" for v in s)]
        bad = [n for n, ok in zip(self.names, self.identifiable) if not ok]
        lines.append("unidentifiable: " + (", ".join(bad) if bad else "none"))
        return "\n".join(lines) + "\n"


# --- excitation ----------------------------------------------------------

def multisine(model: dyn.ChainModel, duration: float, rate: float = 500.0, seed: int = 0,
              n_harmonics: int = 5, f_base: float = 0.2, fill: float = 0.35):
    """Per-joint sums of sines with incommensurate frequencies.

    Joint ``j`` uses harmonics ``k * f_base * c_j`` (k = 1..n_harmonics) with
    irrational per-joint factors ``c_j``, amplitudes falling as 1/k and random
    phases. It oscillates around the middle of its range with peak excursion
    at most ``fill`` times the half-range (capped at 1.2 rad). Returns
    (t, q, qd, qdd) with exact derivatives.
    """
    if duration <= 0 or rate <= 0:
        raise UsageError("duration and rate must be positive")
    rng = np.random.default_rng(seed)
    n = model.n_joints
    lo, hi = model.joint_range.T
    center = 0.5 * (lo + hi)
    half = np.minimum(0.5 * (hi - lo) * fill, 1.2)
    t = np.arange(int(round(duration * rate))) / rate
    q = np.tile(center, (t.size, 1))
    qd = np.zeros_like(q)
    qdd = np.zeros_like(q)
    golden = (1 + 5 ** 0.5) / 2
    for j in range(n):
        freqs = f_base * (1 + np.arange(n_harmonics)) * golden ** (j / n) * (1 + 0.1 * np.sqrt(j + 2))
        w = 2 * np.pi * freqs
        amp = 1.0 / (1 + np.arange(n_harmonics))
        amp *= half[j] / amp.sum()
        ph = rng.uniform(0, 2 * np.pi, n_harmonics)
        for a, wk, p in zip(amp, w, ph):
            arg = wk * t[:, None] + p
            q[:, j] += a * np.sin(arg[:, 0])
            qd[:, j] += a * wk * np.cos(arg[:, 0])
            qdd[:, j] -= a * wk ** 2 * np.sin(arg[:, 0])
    return t, q, qd, qdd


def synthesize(model: dyn.ChainModel, t, q, qd, qdd, noise: float = 0.0,
               rng: np.random.Generator | None = None) -> IdentData:
    """Torques of ``model`` along a trajectory plus optional relative noise.

    ``noise`` is the standard deviation as a fraction of each joint's RMS torque.
    """
    tau = np.array([dyn.inverse_dynamics(model, a, b, c) for a, b, c in zip(q, qd, qdd)])
    if noise:
        rng = rng or np.random.default_rng()
        scale = np.sqrt(np.mean(tau ** 2, axis=0))
        tau = tau + rng.normal(size=tau.shape) * noise * scale
    return IdentData(t, q, qd, qdd, tau)


# --- resampling ----------------------------------------------------------

def resample(t, x, target_hz: float, derive: bool = True):
    """Zero-phase low-pass at 0.4 ``target_hz``, then decimate.

    ``x`` has one row per sample of ``t`` (uniform spacing). With ``derive``
    the filtered stream's first and second central differences are returned
    too. Returns (t_out, x_out, xd_out, xdd_out); the derivatives are None
    without ``derive``.
    """
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    if t.size < 3 or x.shape[0] != t.size:
        raise UsageError("need at least three samples, one row per time stamp")
    dt = np.diff(t)
    if np.any(dt <= 0) or np.ptp(dt) > 1e-6 * dt.mean():
        raise UsageError("time stamps must be uniformly spaced and increasing")
    fs = 1.0 / dt.mean()
    if not 0 < target_hz < fs:
        raise UsageError(f"target rate {target_hz} Hz must lie below the source rate {fs:.6g} Hz")
    step = fs / target_hz
    k = int(round(step))
    if abs(step - k) > 1e-6 * step:
        raise UsageError("source rate must be an integer multiple of the target rate")
    b, a = signal.butter(4, 0.4 * target_hz, fs=fs)
    padlen = 3 * max(len(a), len(b))
    if t.size <= padlen:
        raise UsageError(f"log too short to filter: {t.size} samples, need more than {padlen}")
    xf = signal.filtfilt(b, a, x, axis=0)
    xd = xdd = None
    if derive:
        h = 1.0 / fs
        xd = np.gradient(xf, h, axis=0, edge_order=2)
        xdd = np.gradient(xd, h, axis=0, edge_order=2)
        xd, xdd = xd[::k], xdd[::k]
    return t[::k], xf[::k], xd, xdd


def data_from_log(log: TelemetryLog, arm: str = "f", target_hz: float = 25.0,
                  trim: float = 0.5) -> IdentData:
    """Identification data from one arm of a log: angles, and ``tau_ref`` as torque.

    ``trim`` seconds are dropped at both ends, where zero-phase filtering and
    differencing are least accurate.
    """
    if len(log) < 3:
        raise UsageError("log too short to resample")
    t = log.t
    q = log.signal(arm, "q")
    tau = log.signal(arm, "tau_ref") + log.signal(arm, "tau_ext")
    ts, qs, qds, qdds = resample(t, q, target_hz)
    _, taus, _, _ = resample(t, tau, target_hz, derive=False)
    keep = (ts >= ts[0] + trim) & (ts <= ts[-1] - trim)
    if keep.sum() < 2:
        raise UsageError("log too short after trimming filter edges")
    return IdentData(ts[keep], qs[keep], qds[keep], qdds[keep], taus[keep])


# --- least squares -------------------------------------------------------

def stack_regressor(model: dyn.ChainModel, samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, IdentData):
        samples = samples.samples()
    samples = list(samples)
    if not samples:
        raise UsageError("no samples to stack")
    n = model.n_joints
    Y = np.empty((n * len(samples), model.n_params))
    tau = np.empty(n * len(samples))
    for i, s in enumerate(samples):
        Y[i * n:(i + 1) * n] = dyn.regressor(model, s.theta, s.theta_dot, s.theta_ddot)
        tau[i * n:(i + 1) * n] = s.tau
    return Y, tau


def least_squares_identify(Y, tau, names=(), rcond: float | None = None, row_weights=None):
    """Minimum-norm least-squares solution through the SVD.

    Singular values below ``rcond * sigma_max`` (default ``max(shape) * eps``)
    count as zero. A parameter is flagged unidentifiable when its unit vector
    has a component above 1e-6 in the discarded right singular subspace.
    Rank deficiency produces a warning and the minimum-norm solution.
    ``row_weights`` multiplies each equation (weighted least squares); the
    reported residual is unweighted.
    """
    Y = np.asarray(Y, float)
    tau = np.asarray(tau, float).ravel()
    if Y.ndim != 2 or Y.shape[0] != tau.size:
        raise UsageError(f"Y {Y.shape} and tau {tau.shape} do not match")
    if Y.shape[0] == 0 or Y.shape[1] == 0:
        raise UsageError("empty regression problem")
    if not (np.isfinite(Y).all() and np.isfinite(tau).all()):
        raise UsageError("regression data must be finite")
    rhs = tau
    Yw = Y
    if row_weights is not None:
        w = np.asarray(row_weights, float).ravel()
        if w.shape != tau.shape or not np.all(np.isfinite(w) & (w > 0)):
            raise UsageError("row weights must be positive, one per equation")
        Yw, rhs = Y * w[:, None], tau * w
    # column scaling keeps small-valued parameters from looking unidentifiable
    scale = np.linalg.norm(Yw, axis=0)
    scale[scale == 0] = 1.0
    Ys = Yw / scale
    U, s, Vt = np.linalg.svd(Ys, full_matrices=False)
    if rcond is None:
        rcond = max(Y.shape) * np.finfo(float).eps
    tol = rcond * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    coef = (U[:, :rank].T @ rhs) / s[:rank]
    phi = (Vt[:rank].T @ coef) / scale
    null = Vt[rank:]
    leak = np.sqrt(np.sum(null ** 2, axis=0)) if null.size else np.zeros(Y.shape[1])
    identifiable = leak < 1e-6
    if np.linalg.norm(Y, axis=0).min() == 0:
        identifiable &= np.linalg.norm(Y, axis=0) > 0
    residual = Y @ phi - tau
    diag = Diagnostics(s, rank, float(np.sqrt(np.mean(residual ** 2))), identifiable,
                       tuple(names), float(tol), Y.shape[0])
    if rank < Y.shape[1]:
        bad = [n for n, ok in zip(names, identifiable) if not ok] or \
            [str(i) for i in np.flatnonzero(~identifiable)]
        warnings.warn(f"regressor rank {rank} < {Y.shape[1]} parameters; "
                      f"minimum-norm solution, unidentifiable: {', '.join(bad)}")
    return phi, diag


def weighted_identify(Y, tau, n_joints: int, names=()):
    """Two-step weighted least squares.

    An ordinary fit gives each joint's residual spread; the equations are then
    refit with weights ``1 / sigma_j``. Joint torques differ by orders of
    magnitude, and so does their noise, so the ordinary fit alone is far from
    the best attainable variance.
    """
    tau = np.asarray(tau, float).ravel()
    if tau.size % n_joints:
        raise UsageError("stacked torque length is not a multiple of the joint count")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        phi0, _ = least_squares_identify(Y, tau, names)
    r = (np.asarray(Y, float) @ phi0 - tau).reshape(-1, n_joints)
    size = np.sqrt(np.mean(tau.reshape(-1, n_joints) ** 2, axis=0))
    # a noiseless fit leaves round-off residuals; the floor keeps weights sane
    sigma = np.maximum(np.sqrt(np.mean(r ** 2, axis=0)), 1e-9 * np.maximum(size, 1e-12))
    w = np.tile(1.0 / sigma, tau.size // n_joints)
    return least_squares_identify(Y, tau, names, row_weights=w)


def identify(model: dyn.ChainModel, data: IdentData, weighted: bool = True):
    """(phi-hat as a ParamVector with ``model``'s names, diagnostics).

    ``weighted`` uses :func:`weighted_identify`, otherwise an ordinary fit.
    Noise can push a tiny viscous coefficient slightly below zero; such values
    are clipped to zero because a model cannot hold negative friction.
    """
    Y, tau = stack_regressor(model, data)
    if weighted:
        phi, diag = weighted_identify(Y, tau, model.n_joints, model.phi.names)
    else:
        phi, diag = least_squares_identify(Y, tau, model.phi.names)
    fv = np.array([n.startswith("FV") for n in model.phi.names])
    phi = np.where(fv & (phi < 0), 0.0, phi)
    return dyn.ParamVector(model.phi.names, phi), diag
