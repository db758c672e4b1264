"""Rigid serial-link manipulator model.

Kinematics use the modified Denavit-Hartenberg convention (Khalil/Craig):
link ``j`` is reached from link ``j-1`` by ``RotX(alpha_j) TransX(d_j)
RotZ(theta_j) TransZ(r_j)`` with ``theta_j = theta0_j + q_j``. This is the
convention of SYMORO-family tools, so parameter tables produced there can be
entered directly.

Dynamic parameters are named ``<SLOT><j>`` with slots ``XX XY XZ YY YZ ZZ``
(inertia about the frame-j origin, kg m^2), ``MX MY MZ`` (first moments,
kg m), ``M`` (mass, kg), ``IA`` (motor inertia reflected to the joint,
kg m^2) and ``FV`` (viscous friction, N m s/rad). A trailing ``R`` marks a
regrouped (base) parameter, e.g. ``MYR2`` or ``ZZR1``; it occupies the same
slot as its unregrouped counterpart. Slots that no parameter names are zero.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as K
from .errors import UsageError

SLOTS = K.SLOTS
COND_CAP = 1e8

_NAME_RE = re.compile(r"^(XX|XY|XZ|YY|YZ|ZZ|MX|MY|MZ|M|IA|FV)(R?)(\d+)$")


class DimensionError(UsageError):
    """Input vectors do not match the chain's joint count."""


class SingularityError(RuntimeError):
    """The mass matrix is too ill-conditioned to invert."""

    def __init__(self, cond: float):
        super().__init__(f"mass matrix condition number {cond:.3e} exceeds {COND_CAP:.0e}")
        self.cond = cond


def parse_param_name(name: str) -> tuple[int, int]:
    """Map a parameter name to ``(joint index from 0, slot index)``."""
    m = _NAME_RE.match(name)
    if m is None:
        raise UsageError(f"unrecognised dynamic parameter name {name!r}")
    slot, _, joint = m.groups()
    j = int(joint)
    if j < 1:
        raise UsageError(f"joint numbering starts at 1: {name!r}")
    return j - 1, SLOTS.index(slot)


@dataclass(frozen=True)
class ParamVector:
    """Ordered, named dynamic parameters (the identified vector phi)."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.names),):
            raise UsageError("one value per parameter name required")
        if len(set(self.names)) != len(self.names):
            raise UsageError("duplicate parameter names")
        seen = {}
        for name in self.names:
            key = parse_param_name(name)
            if key in seen:
                raise UsageError(f"{name} and {seen[key]} occupy the same slot")
            seen[key] = name
        for name, v in zip(self.names, values):
            if name.startswith("FV") and v < 0:
                raise UsageError(f"viscous friction {name} must be non-negative")
        values.setflags(write=False)

    @classmethod
    def from_mapping(cls, params: Mapping[str, float]) -> "ParamVector":
        return cls(tuple(params), np.array([float(v) for v in params.values()]))

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def with_values(self, values: Sequence[float]) -> "ParamVector":
        return ParamVector(self.names, np.asarray(values, dtype=float))

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


@dataclass(frozen=True)
class DHRow:
    alpha: float
    d: float
    theta0: float = 0.0
    r: float = 0.0


@dataclass(frozen=True)
class ChainModel:
    links: tuple[DHRow, ...]
    phi: ParamVector
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    torque_limit: np.ndarray | None = None
    name: str = "chain"
    joint_range: np.ndarray | None = None

    def __post_init__(self):
        links = tuple(self.links)
        n = len(links)
        if n < 1:
            raise UsageError("a chain needs at least one joint")
        dh = np.array([[l.alpha, l.d, l.theta0, l.r] for l in links], dtype=float)
        if not np.all(np.isfinite(dh)):
            raise UsageError("DH parameters must be finite")
        gravity = np.asarray(self.gravity, dtype=float).reshape(3)
        limit = (np.full(n, np.inf) if self.torque_limit is None
                 else np.asarray(self.torque_limit, dtype=float).reshape(n))
        if np.any(limit <= 0):
            raise UsageError("torque limits must be strictly positive")
        rng = (np.tile([-np.pi, np.pi], (n, 1)) if self.joint_range is None
               else np.asarray(self.joint_range, dtype=float).reshape(n, 2))
        if np.any(rng[:, 0] > rng[:, 1]):
            raise UsageError("joint_range rows must be (low, high)")
        slot_index = np.array([parse_param_name(nm) for nm in self.phi.names],
                              dtype=np.int64).reshape(-1, 2)
        if np.any(slot_index[:, 0] >= n):
            bad = [nm for nm, (j, _) in zip(self.phi.names, slot_index) if j >= n]
            raise UsageError(f"parameters refer to joints beyond {n}: {bad}")
        P = np.zeros((n, len(SLOTS)))
        P[slot_index[:, 0], slot_index[:, 1]] = self.phi.values
        for arr in (dh, gravity, limit, rng, P):
            arr.setflags(write=False)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "gravity", gravity)
        object.__setattr__(self, "torque_limit", limit)
        object.__setattr__(self, "joint_range", rng)
        object.__setattr__(self, "_dh", dh)
        object.__setattr__(self, "_slot_index", slot_index)
        object.__setattr__(self, "_P", P)

    @property
    def n_joints(self) -> int:
        return len(self.links)

    @property
    def n_params(self) -> int:
        return len(self.phi)

    @property
    def standard_params(self) -> np.ndarray:
        """Per-joint slot matrix (n_joints x 12) implied by ``phi``."""
        return self._P

    def kernel_args(self):
        dh = self._dh
        return dh[:, 0], dh[:, 1], dh[:, 2], dh[:, 3], self._P

    def with_phi(self, phi: ParamVector | Mapping[str, float]) -> "ChainModel":
        if not isinstance(phi, ParamVector):
            phi = ParamVector.from_mapping(phi)
        return replace(self, phi=phi)

    def with_gravity(self, gravity: Iterable[float]) -> "ChainModel":
        return replace(self, gravity=np.asarray(gravity, float))

    def sample_configuration(self, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.joint_range.T
        return rng.uniform(lo, hi)

    def friction(self) -> np.ndarray:
        return self._P[:, SLOTS.index("FV")].copy()


def _vec(model: ChainModel, x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_joints,):
        raise DimensionError(f"{what} has shape {x.shape}, expected ({model.n_joints},)")
    return x


def inverse_dynamics(model: ChainModel, q, qd, qdd) -> np.ndarray:
    """tau = M(q) qdd + C(q, qd) qd + D qd + g(q)."""
    a, d, t0, r, P = model.kernel_args()
    return K.rnea(a, d, t0, r, P, model.gravity, _vec(model, q, "q"),
                  _vec(model, qd, "qd"), _vec(model, qdd, "qdd"))


def mass_matrix(model: ChainModel, q) -> np.ndarray:
    a, d, t0, r, P = model.kernel_args()
    return K.mass_matrix(a, d, t0, r, P, _vec(model, q, "q"))


def mass_and_bias(model: ChainModel, q, qd) -> tuple[np.ndarray, np.ndarray]:
    """M(q) and h(q, qd) from a shared kinematics pass."""
    a, d, t0, r, P = model.kernel_args()
    return K.mass_and_bias(a, d, t0, r, P, model.gravity, _vec(model, q, "q"),
                           _vec(model, qd, "qd"))


def bias_forces(model: ChainModel, q, qd) -> np.ndarray:
    """h(q, qd): centrifugal, Coriolis, friction and gravity torques."""
    return inverse_dynamics(model, q, qd, np.zeros(model.n_joints))


def gravity_torque(model: ChainModel, q) -> np.ndarray:
    z = np.zeros(model.n_joints)
    return inverse_dynamics(model, q, z, z)


def mass_matrix_derivatives(model: ChainModel, q, h: float = 1e-5) -> np.ndarray:
    """dM/dq_k stacked on axis 0, by central differences."""
    q = _vec(model, q, "q")
    n = model.n_joints
    dM = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dM[k] = (mass_matrix(model, q + e) - mass_matrix(model, q - e)) / (2 * h)
    return dM


def coriolis_matrix(model: ChainModel, q, qd) -> np.ndarray:
    """Christoffel-symbol Coriolis matrix, so that dM/dt - 2C is skew."""
    qd = _vec(model, qd, "qd")
    dM = mass_matrix_derivatives(model, q)
    # c_ijk = 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i)
    t1 = np.einsum("kij,k->ij", dM, qd)
    t2 = np.einsum("jik,k->ij", dM, qd)
    t3 = np.einsum("ijk,k->ij", dM, qd)
    return 0.5 * (t1 + t2 - t3)


def regressor(model: ChainModel, q, qd, qdd) -> np.ndarray:
    """Y with Y @ phi == inverse_dynamics, one column per ``phi`` entry."""
    a, d, t0, r, _ = model.kernel_args()
    return K.regressor(a, d, t0, r, model._slot_index, model.gravity,
                       _vec(model, q, "q"), _vec(model, qd, "qd"),
                       _vec(model, qdd, "qdd"))


def forward_dynamics(model: ChainModel, q, qd, tau) -> np.ndarray:
    """qdd = M(q)^-1 (tau - h(q, qd)); raises SingularityError above COND_CAP."""
    a, d, t0, r, P = model.kernel_args()
    qdd, cond = K.forward_dynamics(a, d, t0, r, P, model.gravity,
                                   _vec(model, q, "q"), _vec(model, qd, "qd"),
                                   _vec(model, tau, "tau"))
    if not cond < COND_CAP:
        raise SingularityError(cond)
    return qdd


def integrate_step(model: ChainModel, q, qd, tau, dt: float):
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    if not 0 < dt <= 1e-3:
        raise UsageError(f"dt must lie in (0, 1 ms], got {dt}")
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    qdd = forward_dynamics(model, q, qd, tau)
    qd_new = qd + qdd * dt
    return q + qd_new * dt, qd_new


def potential_energy(model: ChainModel, q) -> float:
    a, d, t0, r, P = model.kernel_args()
    Rs, ps = K.frames(a, d, t0, r, _vec(model, q, "q"))
    g = model.gravity
    U = 0.0
    for j in range(model.n_joints):
        ms = Rs[j] @ P[j, 6:9]
        U -= g @ (P[j, 9] * ps[j] + ms)
    return float(U)


def total_energy(model: ChainModel, q, qd) -> float:
    qd = _vec(model, qd, "qd")
    return float(0.5 * qd @ mass_matrix(model, q) @ qd + potential_energy(model, q))
