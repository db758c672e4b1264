"""Independent reference computations used only by the tests.

Nothing here calls the Newton-Euler kernels: kinematics are rebuilt from
4x4 homogeneous transforms and dynamics come from the Lagrangian.
"""

import numpy as np
from scipy import signal


def _dh_transform(alpha, d, theta, r):
    ca, sa, ct, st = np.cos(alpha), np.sin(alpha), np.cos(theta), np.sin(theta)
    rx = np.array([[1, 0, 0, 0], [0, ca, -sa, 0], [0, sa, ca, 0], [0, 0, 0, 1.0]])
    tx = np.eye(4)
    tx[0, 3] = d
    rz = np.array([[ct, -st, 0, 0], [st, ct, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
    tz = np.eye(4)
    tz[2, 3] = r
    return rx @ tx @ rz @ tz


def forward_kinematics(model, q):
    T = np.eye(4)
    out = []
    for row, qi in zip(model.links, q):
        T = T @ _dh_transform(row.alpha, row.d, row.theta0 + qi, row.r)
        out.append(T.copy())
    return out


def _link_params(model):
    P = model.standard_params
    for j in range(model.n_joints):
        xx, xy, xz, yy, yz, zz, mx, my, mz, m, ia, fv = P[j]
        J = np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
        yield J, np.array([mx, my, mz]), m, ia, fv


def kinetic_energy(model, q, qd):
    Ts = forward_kinematics(model, q)
    T = 0.0
    for j, (J, ms, m, ia, _) in enumerate(_link_params(model)):
        Rj, pj = Ts[j][:3, :3], Ts[j][:3, 3]
        w = np.zeros(3)
        v = np.zeros(3)
        for i in range(j + 1):
            z = Ts[i][:3, 2]
            w += z * qd[i]
            v += np.cross(z, pj - Ts[i][:3, 3]) * qd[i]
        T += 0.5 * m * v @ v + v @ np.cross(w, Rj @ ms) + 0.5 * w @ (Rj @ J @ Rj.T) @ w
        T += 0.5 * ia * qd[j] ** 2
    return T


def potential_energy(model, q):
    Ts = forward_kinematics(model, q)
    g = model.gravity
    return -sum(g @ (m * Ts[j][:3, 3] + Ts[j][:3, :3] @ ms)
                for j, (_, ms, m, _, _) in enumerate(_link_params(model)))


def lagrangian_mass_matrix(model, q):
    """Polarisation of the (quadratic) kinetic energy: exact up to rounding."""
    n = model.n_joints
    E = np.eye(n)
    Tii = [kinetic_energy(model, q, E[i]) for i in range(n)]
    M = np.empty((n, n))
    for i in range(n):
        M[i, i] = 2 * Tii[i]
        for j in range(i + 1, n):
            M[i, j] = M[j, i] = kinetic_energy(model, q, E[i] + E[j]) - Tii[i] - Tii[j]
    return M


def _d5(f, x, k, h):
    e = np.zeros_like(x)
    e[k] = h
    return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)


def lagrangian_inverse_dynamics(model, q, qd, qdd, h=1e-3):
    """d/dt dL/dqd - dL/dq + D qd via the energy functions."""
    n = model.n_joints
    M = lagrangian_mass_matrix(model, q)
    dM = [_d5(lambda x: lagrangian_mass_matrix(model, x), q, k, h) for k in range(n)]
    dU = np.array([_d5(lambda x: potential_energy(model, x), q, k, h) for k in range(n)])
    Mdot = sum(dM[k] * qd[k] for k in range(n))
    dTdq = np.array([0.5 * qd @ dM[i] @ qd for i in range(n)])
    fv = np.array([p[4] for p in _link_params(model)])
    return M @ qdd + Mdot @ qd - dTdq + dU + fv * qd


def two_link_mass_matrix(m1, m2, l1, lc1, lc2, I1, I2, q2):
    c2 = np.cos(q2)
    m11 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * c2) + I1 + I2
    m12 = m2 * (lc2**2 + l1 * lc2 * c2) + I2
    m22 = m2 * lc2**2 + I2
    return np.array([[m11, m12], [m12, m22]])


def rk4(f, x0, dt, n_steps):
    x = np.asarray(x0, float)
    out = [x]
    for _ in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x)
    return np.array(out)


def bilinear_first_order(num_s, den_s, dt):
    """z-domain (b, a) of a continuous transfer function via scipy."""
    return signal.bilinear(num_s, den_s, fs=1.0 / dt)


def lti_response(num_s, den_s, t, u):
    """Continuous-time response on a fine grid (input linearly interpolated)."""
    _, y, _ = signal.lsim(signal.lti(num_s, den_s), u, t)
    return y


def _pad_add(*polys):
    n = max(len(p) for p in polys)
    return sum(np.pad(np.asarray(p, float), (0, n - len(p))) for p in polys)


def _delay(p):
    return np.r_[0.0, p]


def cascade_torque(theta, theta_d, theta_dot_d, tau_d, m, kp, kd, kf, omega, dt, zeta=1.0):
    """Input torque of the single-axis loop written as cascade control.

    Discrete counterpart of  tau_u = m (1 + w^2/(s^2 + 2 zeta w s)) (R - Q2 theta / (1+...))
    including the one-tick delay between computing and applying a command.
    With Q = w^2/D(s) and Q2 = w^2 s^2/D(s) (bilinear, common denominator Dq)
    and the acceleration reference R = z^-1 E::

        U (1 - z^-1 Q) = R - z^-1 Q2 theta

    so U = z^-1 Dq/Nd E - z^-1 Nq2/Nd theta with Nd = Dq - z^-1 Nq, whose root
    at z = 1 is the integral action of the acceleration loop. E is the
    PD + force law with the velocity estimate H R + P theta,
    H = 1/(s + 2 zeta w), P = 2 zeta w s/(s + 2 zeta w), and the torque
    estimate (Q2 theta - z^-1 Q E)/(1 - z^-1 Q). Returns m U, i.e. tau_u[k]
    for k = 0..len-1.
    """
    fs = 1.0 / dt
    D = [1.0, 2 * zeta * omega, omega ** 2]
    Nq, Dq = signal.bilinear([omega ** 2], D, fs=fs)
    Nq2, Dq2 = signal.bilinear([omega ** 2, 0.0, 0.0], D, fs=fs)
    assert np.allclose(Dq, Dq2)
    Nh, Dh = signal.bilinear([1.0], [1.0, 2 * zeta * omega], fs=fs)
    Np, Dh2 = signal.bilinear([2 * zeta * omega, 0.0], [1.0, 2 * zeta * omega], fs=fs)
    assert np.allclose(Dh, Dh2)
    kfn = 0.5 * kf
    Nd = _pad_add(Dq, -_delay(Nq))
    lam = _pad_add(np.convolve(Nd, Dh), kd * _delay(np.convolve(Nh, Nd)),
                   kfn * _delay(np.convolve(Nq, Dh)))
    drive = kp * (np.asarray(theta_d) - theta) + kd * np.asarray(theta_dot_d) \
        + kf / (2 * m) * np.asarray(tau_d)
    E = (signal.lfilter(np.convolve(Nd, Dh), lam, drive)
         + signal.lfilter(_pad_add(kfn * np.convolve(Nq2, Dh), -kd * np.convolve(Nd, Np)),
                          lam, theta))
    # split off the integrator (root of Nd at z = 1) and integrate exactly
    Nr, rem = np.polydiv(Nd[::-1], [1.0, -1.0])
    assert abs(rem[-1]) < 1e-12 * np.abs(Nd).max()
    Nr = -Nr[::-1]          # Nd = Nr (1 - z^-1)
    V = signal.lfilter(_delay(Dq), Nr, E) - signal.lfilter(_delay(Nq2), Nr, theta)
    return m * np.cumsum(V)
