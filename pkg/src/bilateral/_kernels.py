"""Compiled Newton-Euler kernels for modified-DH serial chains.

Per-link parameter rows follow ``SLOTS``; inertia and first moments are
expressed in the link frame about its origin. Every routine here is linear
in the parameter rows, which is what makes the unit-basis regressor exact.
Work arrays are preallocated per call; the inner loops are scalar so a
full 8-axis pass costs a few microseconds.
"""

import numpy as np
from numba import njit

SLOTS = ("XX", "XY", "XZ", "YY", "YZ", "ZZ", "MX", "MY", "MZ", "M", "IA", "FV")
N_SLOTS = len(SLOTS)


@njit(cache=True)
def _kinematics(alpha, d, theta0, r, q, R, p):
    # R[j] = RotX(alpha) RotZ(theta), parent <- child; p[j] = origin j in parent
    for j in range(q.shape[0]):
        ca = np.cos(alpha[j])
        sa = np.sin(alpha[j])
        th = theta0[j] + q[j]
        ct = np.cos(th)
        st = np.sin(th)
        R[j, 0, 0] = ct
        R[j, 0, 1] = -st
        R[j, 0, 2] = 0.0
        R[j, 1, 0] = ca * st
        R[j, 1, 1] = ca * ct
        R[j, 1, 2] = -sa
        R[j, 2, 0] = sa * st
        R[j, 2, 1] = sa * ct
        R[j, 2, 2] = ca
        p[j, 0] = d[j]
        p[j, 1] = -sa * r[j]
        p[j, 2] = ca * r[j]


@njit(cache=True)
def _rnea_core(R, p, P, gravity, qd, qdd, tau, F, N):
    n = qd.shape[0]
    w0 = 0.0
    w1 = 0.0
    w2 = 0.0
    a0 = 0.0
    a1 = 0.0
    a2 = 0.0
    v0 = -gravity[0]
    v1 = -gravity[1]
    v2 = -gravity[2]
    for j in range(n):
        px = p[j, 0]
        py = p[j, 1]
        pz = p[j, 2]
        # parent-frame origin acceleration: vd + wd x p + w x (w x p)
        c0 = w1 * pz - w2 * py
        c1 = w2 * px - w0 * pz
        c2 = w0 * py - w1 * px
        u0 = v0 + (a1 * pz - a2 * py) + (w1 * c2 - w2 * c1)
        u1 = v1 + (a2 * px - a0 * pz) + (w2 * c0 - w0 * c2)
        u2 = v2 + (a0 * py - a1 * px) + (w0 * c1 - w1 * c0)
        Rj = R[j]
        v0 = Rj[0, 0] * u0 + Rj[1, 0] * u1 + Rj[2, 0] * u2
        v1 = Rj[0, 1] * u0 + Rj[1, 1] * u1 + Rj[2, 1] * u2
        v2 = Rj[0, 2] * u0 + Rj[1, 2] * u1 + Rj[2, 2] * u2
        wp0 = Rj[0, 0] * w0 + Rj[1, 0] * w1 + Rj[2, 0] * w2
        wp1 = Rj[0, 1] * w0 + Rj[1, 1] * w1 + Rj[2, 1] * w2
        wp2 = Rj[0, 2] * w0 + Rj[1, 2] * w1 + Rj[2, 2] * w2
        ap0 = Rj[0, 0] * a0 + Rj[1, 0] * a1 + Rj[2, 0] * a2
        ap1 = Rj[0, 1] * a0 + Rj[1, 1] * a1 + Rj[2, 1] * a2
        ap2 = Rj[0, 2] * a0 + Rj[1, 2] * a1 + Rj[2, 2] * a2
        qdj = qd[j]
        # wd = R^T wd + (R^T w) x (qd z) + qdd z
        a0 = ap0 + wp1 * qdj
        a1 = ap1 - wp0 * qdj
        a2 = ap2 + qdd[j]
        w0 = wp0
        w1 = wp1
        w2 = wp2 + qdj

        xx = P[j, 0]
        xy = P[j, 1]
        xz = P[j, 2]
        yy = P[j, 3]
        yz = P[j, 4]
        zz = P[j, 5]
        mx = P[j, 6]
        my = P[j, 7]
        mz = P[j, 8]
        m = P[j, 9]
        # w x ms, then w x (w x ms)
        b0 = w1 * mz - w2 * my
        b1 = w2 * mx - w0 * mz
        b2 = w0 * my - w1 * mx
        F[j, 0] = m * v0 + (a1 * mz - a2 * my) + (w1 * b2 - w2 * b1)
        F[j, 1] = m * v1 + (a2 * mx - a0 * mz) + (w2 * b0 - w0 * b2)
        F[j, 2] = m * v2 + (a0 * my - a1 * mx) + (w0 * b1 - w1 * b0)
        j0 = xx * w0 + xy * w1 + xz * w2
        j1 = xy * w0 + yy * w1 + yz * w2
        j2 = xz * w0 + yz * w1 + zz * w2
        N[j, 0] = (xx * a0 + xy * a1 + xz * a2) + (w1 * j2 - w2 * j1) + (my * v2 - mz * v1)
        N[j, 1] = (xy * a0 + yy * a1 + yz * a2) + (w2 * j0 - w0 * j2) + (mz * v0 - mx * v2)
        N[j, 2] = (xz * a0 + yz * a1 + zz * a2) + (w0 * j1 - w1 * j0) + (mx * v1 - my * v0)

    f0 = 0.0
    f1 = 0.0
    f2 = 0.0
    n0 = 0.0
    n1 = 0.0
    n2 = 0.0
    for j in range(n - 1, -1, -1):
        if j < n - 1:
            Rc = R[j + 1]
            fc0 = Rc[0, 0] * f0 + Rc[0, 1] * f1 + Rc[0, 2] * f2
            fc1 = Rc[1, 0] * f0 + Rc[1, 1] * f1 + Rc[1, 2] * f2
            fc2 = Rc[2, 0] * f0 + Rc[2, 1] * f1 + Rc[2, 2] * f2
            nc0 = Rc[0, 0] * n0 + Rc[0, 1] * n1 + Rc[0, 2] * n2
            nc1 = Rc[1, 0] * n0 + Rc[1, 1] * n1 + Rc[1, 2] * n2
            nc2 = Rc[2, 0] * n0 + Rc[2, 1] * n1 + Rc[2, 2] * n2
            px = p[j + 1, 0]
            py = p[j + 1, 1]
            pz = p[j + 1, 2]
            nc0 += py * fc2 - pz * fc1
            nc1 += pz * fc0 - px * fc2
            nc2 += px * fc1 - py * fc0
        else:
            fc0 = fc1 = fc2 = 0.0
            nc0 = nc1 = nc2 = 0.0
        f0 = F[j, 0] + fc0
        f1 = F[j, 1] + fc1
        f2 = F[j, 2] + fc2
        n0 = N[j, 0] + nc0
        n1 = N[j, 1] + nc1
        n2 = N[j, 2] + nc2
        tau[j] = n2 + P[j, 10] * qdd[j] + P[j, 11] * qd[j]


@njit(cache=True)
def rnea(alpha, d, theta0, r, P, gravity, q, qd, qdd):
    """Joint torques for the chain; gravity is the base-frame field (m/s^2)."""
    n = q.shape[0]
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    _kinematics(alpha, d, theta0, r, q, R, p)
    tau = np.empty(n)
    F = np.empty((n, 3))
    N = np.empty((n, 3))
    _rnea_core(R, p, P, gravity, qd, qdd, tau, F, N)
    return tau


@njit(cache=True)
def _mass_matrix_core(R, p, P, M, F, N):
    # column k = ID(q, 0, e_k) with gravity off; joints before k stay at rest
    n = R.shape[0]
    for k in range(n):
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        v0 = 0.0
        v1 = 0.0
        v2 = 0.0
        for j in range(k, n):
            if j > k:
                px = p[j, 0]
                py = p[j, 1]
                pz = p[j, 2]
                u0 = v0 + (a1 * pz - a2 * py)
                u1 = v1 + (a2 * px - a0 * pz)
                u2 = v2 + (a0 * py - a1 * px)
                Rj = R[j]
                v0 = Rj[0, 0] * u0 + Rj[1, 0] * u1 + Rj[2, 0] * u2
                v1 = Rj[0, 1] * u0 + Rj[1, 1] * u1 + Rj[2, 1] * u2
                v2 = Rj[0, 2] * u0 + Rj[1, 2] * u1 + Rj[2, 2] * u2
                b0 = Rj[0, 0] * a0 + Rj[1, 0] * a1 + Rj[2, 0] * a2
                b1 = Rj[0, 1] * a0 + Rj[1, 1] * a1 + Rj[2, 1] * a2
                b2 = Rj[0, 2] * a0 + Rj[1, 2] * a1 + Rj[2, 2] * a2
                a0 = b0
                a1 = b1
                a2 = b2
            else:
                a2 = 1.0
            xx = P[j, 0]
            xy = P[j, 1]
            xz = P[j, 2]
            yy = P[j, 3]
            yz = P[j, 4]
            zz = P[j, 5]
            mx = P[j, 6]
            my = P[j, 7]
            mz = P[j, 8]
            m = P[j, 9]
            F[j, 0] = m * v0 + (a1 * mz - a2 * my)
            F[j, 1] = m * v1 + (a2 * mx - a0 * mz)
            F[j, 2] = m * v2 + (a0 * my - a1 * mx)
            N[j, 0] = (xx * a0 + xy * a1 + xz * a2) + (my * v2 - mz * v1)
            N[j, 1] = (xy * a0 + yy * a1 + yz * a2) + (mz * v0 - mx * v2)
            N[j, 2] = (xz * a0 + yz * a1 + zz * a2) + (mx * v1 - my * v0)
        f0 = f1 = f2 = 0.0
        n0 = n1 = n2 = 0.0
        for j in range(n - 1, -1, -1):
            if j < n - 1:
                Rc = R[j + 1]
                fc0 = Rc[0, 0] * f0 + Rc[0, 1] * f1 + Rc[0, 2] * f2
                fc1 = Rc[1, 0] * f0 + Rc[1, 1] * f1 + Rc[1, 2] * f2
                fc2 = Rc[2, 0] * f0 + Rc[2, 1] * f1 + Rc[2, 2] * f2
                nc0 = Rc[0, 0] * n0 + Rc[0, 1] * n1 + Rc[0, 2] * n2
                nc1 = Rc[1, 0] * n0 + Rc[1, 1] * n1 + Rc[1, 2] * n2
                nc2 = Rc[2, 0] * n0 + Rc[2, 1] * n1 + Rc[2, 2] * n2
                px = p[j + 1, 0]
                py = p[j + 1, 1]
                pz = p[j + 1, 2]
                nc0 += py * fc2 - pz * fc1
                nc1 += pz * fc0 - px * fc2
                nc2 += px * fc1 - py * fc0
            else:
                fc0 = fc1 = fc2 = 0.0
                nc0 = nc1 = nc2 = 0.0
            if j >= k:
                f0 = F[j, 0] + fc0
                f1 = F[j, 1] + fc1
                f2 = F[j, 2] + fc2
                n0 = N[j, 0] + nc0
                n1 = N[j, 1] + nc1
                n2 = N[j, 2] + nc2
            else:
                f0 = fc0
                f1 = fc1
                f2 = fc2
                n0 = nc0
                n1 = nc1
                n2 = nc2
            M[j, k] = n2
        M[k, k] += P[k, 10]


@njit(cache=True)
def mass_matrix(alpha, d, theta0, r, P, q):
    n = q.shape[0]
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    _kinematics(alpha, d, theta0, r, q, R, p)
    M = np.empty((n, n))
    F = np.empty((n, 3))
    N = np.empty((n, 3))
    _mass_matrix_core(R, p, P, M, F, N)
    return M


@njit(cache=True)
def mass_and_bias(alpha, d, theta0, r, P, gravity, q, qd):
    """M(q) and h(q, qd) sharing one kinematics pass."""
    n = q.shape[0]
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    _kinematics(alpha, d, theta0, r, q, R, p)
    M = np.empty((n, n))
    F = np.empty((n, 3))
    N = np.empty((n, 3))
    _mass_matrix_core(R, p, P, M, F, N)
    h = np.empty(n)
    _rnea_core(R, p, P, gravity, qd, np.zeros(n), h, F, N)
    return M, h


@njit(cache=True)
def forward_dynamics(alpha, d, theta0, r, P, gravity, q, qd, tau):
    """Returns (qdd, condition number of M)."""
    M, h = mass_and_bias(alpha, d, theta0, r, P, gravity, q, qd)
    w = np.linalg.eigvalsh(M)
    cond = np.inf if w[0] <= 0.0 else w[-1] / w[0]
    qdd = np.linalg.solve(M, tau - h)
    return qdd, cond


@njit(cache=True)
def regressor(alpha, d, theta0, r, slot_index, gravity, q, qd, qdd):
    """Unit-basis evaluation; slot_index[k] = (joint, slot) of parameter k."""
    n = q.shape[0]
    n_par = slot_index.shape[0]
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    _kinematics(alpha, d, theta0, r, q, R, p)
    F = np.empty((n, 3))
    N = np.empty((n, 3))
    tau = np.empty(n)
    Y = np.empty((n, n_par))
    P = np.zeros((n, 12))
    for k in range(n_par):
        j = slot_index[k, 0]
        s = slot_index[k, 1]
        P[j, s] = 1.0
        _rnea_core(R, p, P, gravity, qd, qdd, tau, F, N)
        Y[:, k] = tau
        P[j, s] = 0.0
    return Y


@njit(cache=True)
def frames(alpha, d, theta0, r, q):
    """Base-frame rotations and origins of every link frame."""
    n = q.shape[0]
    Rl = np.empty((n, 3, 3))
    pl = np.empty((n, 3))
    _kinematics(alpha, d, theta0, r, q, Rl, pl)
    Rs = np.empty((n, 3, 3))
    ps = np.empty((n, 3))
    R = np.eye(3)
    pos = np.zeros(3)
    for j in range(n):
        pos = pos + R @ pl[j]
        R = R @ Rl[j]
        Rs[j] = R
        ps[j] = pos
    return Rs, ps


@njit(cache=True)
def _chol_solve(M, b, x):
    """Solve M x = b for symmetric M; False if M is not positive definite."""
    n = M.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return True


@njit(cache=True)
def spd_inverse(M, out):
    """Inverse of a symmetric M into ``out``; False if M is not positive definite."""
    n = M.shape[0]
    e = np.zeros(n)
    col = np.zeros(n)
    for j in range(n):
        e[:] = 0.0
        e[j] = 1.0
        if not _chol_solve(M, e, col):
            return False
        out[:, j] = col
    return True


@njit(cache=True)
def contact_torque(q, qd, pos, k, d, side, out):
    """One-sided spring-damper; side +1 resists q > pos, -1 resists q < pos.

    The contact can only push the joint out of the wall, never pull it in.
    """
    for i in range(q.shape[0]):
        s = side[i]
        if s == 0.0:
            continue
        depth = s * (q[i] - pos[i])
        if depth > 0.0:
            f = k[i] * depth + d[i] * s * qd[i]
            if f > 0.0:
                out[i] -= s * f


@njit(cache=True, nogil=True)
def contact_energy(q, pos, k, side):
    """Energy stored in the springs of :func:`contact_torque`."""
    e = 0.0
    for i in range(q.shape[0]):
        depth = side[i] * (q[i] - pos[i])
        if side[i] != 0.0 and depth > 0.0:
            e += 0.5 * k[i] * depth * depth
    return e


@njit(cache=True, nogil=True)
def physics_tick(alpha, d, theta0, r, P, gravity, q, qd, tau_cmd, dt,
                 hand_q, hand_v, hand_a, hand_k, hand_d, hand_m, hand_max,
                 wall_pos, wall_k, wall_d, wall_side,
                 stop_lo, stop_hi, stop_k, stop_d):
    """Advance one control period by ``hand_q.shape[0]`` semi-implicit Euler steps.

    The hand is a limb of inertia ``hand_m`` behind a clamped spring-damper
    that tracks (hand_q, hand_v, hand_a); its inertia is solved together with
    the arm. Returns (q, qd, external torque at the start of the period, work
    done by the walls, work done by the hand, ok). ``ok`` is False if the
    mass matrix lost positive definiteness.
    """
    n = q.shape[0]
    n_sub = hand_q.shape[0]
    q = q.copy()
    qd = qd.copy()
    ext0 = np.zeros(n)
    qdd = np.zeros(n)
    ones = np.ones(n)
    w_wall = 0.0
    w_hand = 0.0
    for s in range(n_sub):
        hand = np.zeros(n)
        for i in range(n):
            t = hand_k[i] * (hand_q[s, i] - q[i]) + hand_d[i] * (hand_v[s, i] - qd[i])
            if t > hand_max[i]:
                t = hand_max[i]
            elif t < -hand_max[i]:
                t = -hand_max[i]
            hand[i] = t + hand_m[i] * hand_a[s, i]
        wall = np.zeros(n)
        contact_torque(q, qd, wall_pos, wall_k, wall_d, wall_side, wall)
        stops = np.zeros(n)
        contact_torque(q, qd, stop_hi, stop_k, stop_d, ones, stops)
        contact_torque(q, qd, stop_lo, stop_k, stop_d, -ones, stops)
        M, h = mass_and_bias(alpha, d, theta0, r, P, gravity, q, qd)
        for i in range(n):
            M[i, i] += hand_m[i]
        if not _chol_solve(M, tau_cmd + hand + wall + stops - h, qdd):
            return q, qd, ext0, w_wall, w_hand, False
        for i in range(n):
            hand[i] -= hand_m[i] * qdd[i]
        if s == 0:
            ext0[:] = hand + wall + stops
        # wall springs are accounted through their stored energy, which keeps
        # a lossless wall from showing spurious work; the rest is dissipation
        e0 = contact_energy(q, wall_pos, wall_k, wall_side)
        spring = np.zeros(n)
        for i in range(n):
            depth = wall_side[i] * (q[i] - wall_pos[i])
            if wall_side[i] != 0.0 and depth > 0.0:
                spring[i] = -wall_side[i] * wall_k[i] * depth
        for i in range(n):
            qd[i] += qdd[i] * dt
            step = qd[i] * dt
            q[i] += step
            w_wall += (wall[i] - spring[i]) * step
            w_hand += hand[i] * step
        w_wall -= contact_energy(q, wall_pos, wall_k, wall_side) - e0
    return q, qd, ext0, w_wall, w_hand, True
