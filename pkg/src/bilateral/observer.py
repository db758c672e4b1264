"""Velocity and external-torque observer built from first-order bilinear sections.

Velocity estimate (complementary split at 2*zeta*wc)::

    qd_hat = 1/(s + 2 zeta wc) * qdd_ref + 2 zeta wc * s/(s + 2 zeta wc) * q

External torque estimate::

    tau_hat = M * wc^2/(s^2 + 2 zeta wc s + wc^2) * (s^2 q - M^-1 tau_u)

For zeta = 1 the torque path is the cascade of three first-order filters that
needs no explicit differentiation; :func:`observer_update` runs those
recurrences exactly as printed. Other zeta values use second-order bilinear
sections for the torque path (complex poles cannot be split into real
first-order factors).

Index convention: at tick k the caller passes the torque ``tau_u`` and the
acceleration reference that were commanded at the end of tick k-1 and acted on
the plant during the interval that produced ``theta[k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import UsageError, require_finite


@dataclass(frozen=True)
class ObserverConfig:
    omega_c: float = 50.0
    zeta: float = 1.0
    dt: float = 1e-3

    def __post_init__(self):
        if not self.omega_c > 0:
            raise UsageError(f"omega_c must be positive, got {self.omega_c}")
        if not self.zeta > 0:
            raise UsageError(f"zeta must be positive, got {self.zeta}")
        if not 0 < self.dt * self.omega_c < 2:
            raise UsageError(f"need 0 < dt*omega_c < 2, got {self.dt * self.omega_c}")

    @property
    def critically_damped(self) -> bool:
        return self.zeta == 1.0

    def poles(self) -> np.ndarray:
        """Discrete poles of every filter section used by the observer."""
        w, T = self.omega_c, self.dt
        p = [lpf1_coeffs(w, T)[0], lpf1_coeffs(2 * self.zeta * w, T, check=False)[0]]
        if not self.critically_damped:
            _, a = _torque_biquads(self)[1]
            p.extend(np.roots(a))
        return np.asarray(p, dtype=complex)


def lpf1_coeffs(omega: float, dt: float, check: bool = True) -> tuple[float, float]:
    """Bilinear discretisation of omega/(s+omega): y = a*y_prev + b*(x + x_prev)."""
    wt = omega * dt
    if check and not 0 < wt < 2:
        raise UsageError(f"need 0 < omega*dt < 2, got {wt}")
    return (2 - wt) / (2 + wt), wt / (2 + wt)


def lpf1_step(state, x_k, x_prev, omega: float, dt: float):
    """One step of the bilinear first-order low-pass filter with unit DC gain."""
    a, b = lpf1_coeffs(omega, dt)
    return a * state + b * (x_k + x_prev)


def integ_hpf_step(state, accel_k, accel_prev, omega2: float, dt: float):
    """One step of 1/(s + omega2): integration followed by a high-pass."""
    wt = omega2 * dt
    if not wt > 0:
        raise UsageError(f"need omega2*dt > 0, got {wt}")
    return (2 - wt) / (2 + wt) * state + dt / (2 + wt) * (accel_k + accel_prev)


def warping_error(omega: float, dt: float) -> float:
    """Relative shift of the -3 dB frequency caused by the bilinear map."""
    x = omega * dt / 2
    return 1.0 - np.arctan(x) / x


def _torque_biquads(cfg: ObserverConfig):
    """(b, a) for w^2 s^2/D(s) acting on q and w^2/D(s) acting on M^-1 tau_u."""
    w, z = cfg.omega_c, cfg.zeta
    den = [1.0, 2 * z * w, w * w]
    fs = 1.0 / cfg.dt
    return (signal.bilinear([w * w, 0.0, 0.0], den, fs=fs),
            signal.bilinear([w * w], den, fs=fs))


class _Biquad:
    """Transposed direct-form-II second-order section over a vector of channels."""

    def __init__(self, b, a, n: int, x0=None):
        self.b = np.asarray(b, float) / a[0]
        self.a = np.asarray(a, float) / a[0]
        self.z = np.zeros((2, n))
        if x0 is not None:
            self.z = np.outer(signal.lfilter_zi(self.b, self.a), x0)

    def step(self, x):
        b, a, z = self.b, self.a, self.z
        y = b[0] * x + z[0]
        z[0] = b[1] * x - a[1] * y + z[1]
        z[1] = b[2] * x - a[2] * y
        return y


@dataclass
class ObserverState:
    """Persistent filter memory of one arm's observer."""

    prev_theta: np.ndarray
    int_hpf: np.ndarray
    lpf_vob: np.ndarray
    lpf_fob: np.ndarray
    tau_u_lpf: np.ndarray
    temp_prev: np.ndarray
    temp_lpf: np.ndarray
    prev_accel_ref: np.ndarray
    prev_tau_u: np.ndarray
    pdiff_fob: np.ndarray
    tick: int = 0
    biquads: tuple | None = field(default=None, repr=False)

    @classmethod
    def create(cls, theta0, cfg: ObserverConfig | None = None, settle: bool = True,
               biquad: bool | None = None):
        """State after the initialisation block.

        ``theta0`` is the first encoder reading. With ``settle=False`` every
        filter starts at zero, so a non-zero ``theta0`` produces a large
        start-up velocity transient. ``settle=True`` starts the angle low-passes
        at ``theta0`` instead, which is the steady state of an arm at rest.
        ``biquad`` selects the second-order torque path; by default it is used
        only when ``cfg.zeta != 1``.
        """
        theta0 = np.array(theta0, dtype=float)
        n = theta0.shape[0]
        z = np.zeros(n)
        lpf0 = theta0.copy() if settle else z.copy()
        st = cls(prev_theta=theta0.copy(), int_hpf=z.copy(), lpf_vob=lpf0,
                 lpf_fob=lpf0.copy(), tau_u_lpf=z.copy(), temp_prev=z.copy(),
                 temp_lpf=z.copy(), prev_accel_ref=z.copy(), prev_tau_u=z.copy(),
                 pdiff_fob=z.copy())
        if biquad is None:
            biquad = cfg is not None and not cfg.critically_damped
        if biquad:
            if cfg is None:
                raise UsageError("the second-order torque path needs a config")
            (bq, aq), (bu, au) = _torque_biquads(cfg)
            st.biquads = (_Biquad(bq, aq, n, theta0 if settle else None),
                          _Biquad(bu, au, n))
        return st

    @classmethod
    def zeros(cls, n: int, cfg: ObserverConfig | None = None):
        return cls.create(np.zeros(n), cfg, settle=False)

    @property
    def n(self) -> int:
        return self.prev_theta.shape[0]


def observer_update(cfg: ObserverConfig, st: ObserverState, theta, tau_u, accel_ref,
                    M, M_inv=None):
    """Advance the observer by one tick and return ``(qd_hat, tau_hat)``.

    ``M`` is the model inertia at ``theta``; ``M_inv`` may be passed when the
    caller already has it. ``st`` is updated in place.
    """
    theta = np.asarray(theta, float)
    tau_u = np.asarray(tau_u, float)
    accel_ref = np.asarray(accel_ref, float)
    n = st.n
    if theta.shape != (n,) or tau_u.shape != (n,) or accel_ref.shape != (n,):
        raise UsageError(f"observer inputs must have shape ({n},)")
    if np.shape(M) != (n, n):
        raise UsageError(f"inertia must have shape ({n}, {n})")
    require_finite("theta", theta, tick=st.tick)
    require_finite("tau_u", tau_u, tick=st.tick)
    require_finite("accel_ref", accel_ref, tick=st.tick)
    if M_inv is None:
        M_inv = np.linalg.inv(M)

    w, T = cfg.omega_c, cfg.dt
    w2 = 2 * cfg.zeta * w
    a2, b2 = lpf1_coeffs(w2, T, check=False)
    a1, b1 = lpf1_coeffs(w, T)

    # velocity
    st.int_hpf = a2 * st.int_hpf + T / (2 + w2 * T) * (accel_ref + st.prev_accel_ref)
    st.lpf_vob = a2 * st.lpf_vob + b2 * (theta + st.prev_theta)
    qd_hat = st.int_hpf + w2 * (theta - st.lpf_vob)

    # external torque
    st.lpf_fob = a1 * st.lpf_fob + b1 * (theta + st.prev_theta)
    st.pdiff_fob = w * (theta - st.lpf_fob)
    if st.biquads is None:
        st.tau_u_lpf = a1 * st.tau_u_lpf + b1 * (M_inv @ tau_u + M_inv @ st.prev_tau_u)
        temp = st.tau_u_lpf + w * st.pdiff_fob
        st.temp_lpf = a1 * st.temp_lpf + b1 * (temp + st.temp_prev)
        st.temp_prev = temp
        tau_hat = M @ (-st.temp_lpf + w * st.pdiff_fob)
    else:
        bq_theta, bq_u = st.biquads
        tau_hat = M @ (bq_theta.step(theta) - bq_u.step(M_inv @ tau_u))

    st.prev_theta = theta.copy()
    st.prev_tau_u = tau_u.copy()
    st.prev_accel_ref = accel_ref.copy()
    st.tick += 1
    require_finite("qd_hat", qd_hat, tick=st.tick)
    require_finite("tau_hat", tau_hat, tick=st.tick)
    return qd_hat, tau_hat


@dataclass
class PseudoDiffState:
    prev_theta: np.ndarray
    lpf: np.ndarray

    @classmethod
    def create(cls, theta0, settle: bool = True):
        theta0 = np.array(theta0, dtype=float)
        return cls(theta0.copy(), theta0.copy() if settle else np.zeros_like(theta0))


def pseudo_diff_velocity(state: PseudoDiffState, theta, omega: float, dt: float):
    """omega*s/(s+omega) applied to the angle: omega*(theta - LPF(theta))."""
    theta = np.asarray(theta, float)
    state.lpf = lpf1_step(state.lpf, theta, state.prev_theta, omega, dt)
    state.prev_theta = theta.copy()
    return omega * (theta - state.lpf)
