"""Kinematics of the planar 3-RRR parallel robot.

Conventions
-----------
Chain ``i`` starts at the base anchor ``A_i``. The active angle ``qa`` is the
absolute angle of link 1, the passive angle ``qp`` is the elbow angle of link 2
relative to link 1 and the coupling angle ``qc`` closes the angle loop at the
platform::

    elbow    B_i = A_i + l1 * u(qa)
    coupling C_i = B_i + l2 * u(qa + qp)
    platform P_i = x_t + R(x_r) b_i            (C_i == P_i when closed)
    angles   qa + qp + qc == x_r + phi_i       (phi_i = polar angle of b_i)

The stacked joint vector is ``q = [qa1, qp1, qc1, qa2, qp2, qc2, qa3, qp3, qc3]``
and poses are arrays ``x = [x, y, x_r]``. Chains are numbered 1..3 wherever
they leave the module (contact locations, classifier labels); array indices
are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, SingularJacobian, Unreachable

N_CHAINS = 3
ACTIVE = np.array([0, 3, 6])
PASSIVE = np.array([1, 4, 7])
COUPLING = np.array([2, 5, 8])

COND_LIMIT = 1e12


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    if isinstance(a, (float, int, np.floating)):
        w = math.fmod(float(a) + math.pi, 2.0 * math.pi)
        if w <= 0.0:
            w += 2.0 * math.pi
        return w - math.pi
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


def rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _u(a):
    return np.array([np.cos(a), np.sin(a)])


def _uperp(a):
    return np.array([-np.sin(a), np.cos(a)])


def cross2(a, b):
    """z-component of the planar cross product."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass
class RobotGeometry:
    base_anchor: np.ndarray
    platform_anchor: np.ndarray
    link1_len: np.ndarray
    link2_len: np.ndarray

    def __post_init__(self):
        self.base_anchor = np.asarray(self.base_anchor, dtype=float).reshape(N_CHAINS, 2)
        self.platform_anchor = np.asarray(self.platform_anchor, dtype=float).reshape(N_CHAINS, 2)
        self.link1_len = np.broadcast_to(np.asarray(self.link1_len, dtype=float), (N_CHAINS,)).copy()
        self.link2_len = np.broadcast_to(np.asarray(self.link2_len, dtype=float), (N_CHAINS,)).copy()
        if np.any(self.link1_len <= 0) or np.any(self.link2_len <= 0):
            raise ValueError("link lengths must be positive")
        for pts, name in ((self.base_anchor, "base"), (self.platform_anchor, "platform")):
            for i in range(N_CHAINS):
                for j in range(i + 1, N_CHAINS):
                    if np.allclose(pts[i], pts[j]):
                        raise ValueError(f"{name} anchors {i + 1} and {j + 1} coincide")
        self.anchor_angle = np.arctan2(self.platform_anchor[:, 1], self.platform_anchor[:, 0])

    @classmethod
    def symmetric(cls, base_radius=0.4, platform_radius=0.1, l1=0.25, l2=0.25):
        """Equilateral layout with anchors at 90, 210 and 330 degrees."""
        ang = np.deg2rad([90.0, 210.0, 330.0])
        circ = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return cls(base_radius * circ, platform_radius * circ, l1, l2)


@dataclass
class PlatformPose:
    x_t: np.ndarray = field(default_factory=lambda: np.zeros(2))
    x_r: float = 0.0

    def __post_init__(self):
        self.x_t = np.asarray(self.x_t, dtype=float).reshape(2)
        self.x_r = wrap_angle(self.x_r)

    def as_array(self):
        return np.array([self.x_t[0], self.x_t[1], self.x_r])

    @classmethod
    def from_array(cls, x):
        return cls(np.asarray(x[:2]), float(x[2]))


def _pose(x):
    if isinstance(x, PlatformPose):
        return x.as_array()
    return np.asarray(x, dtype=float).reshape(3)


@dataclass
class JointConfig:
    """Joint angles, one row ``[qa, qp, qc]`` per chain."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float).reshape(N_CHAINS, 3)

    @property
    def q(self):
        return self.angles.reshape(-1).copy()

    @property
    def qa(self):
        return self.angles[:, 0].copy()

    @property
    def qp(self):
        return self.angles[:, 1].copy()

    @property
    def qc(self):
        return self.angles[:, 2].copy()

    @classmethod
    def from_stacked(cls, q):
        return cls(np.asarray(q, dtype=float).reshape(N_CHAINS, 3))


def _joints(q):
    if isinstance(q, JointConfig):
        return q.angles
    return np.asarray(q, dtype=float).reshape(N_CHAINS, 3)


@dataclass(frozen=True)
class ContactLocation:
    """A point on the structure.

    ``link`` is 1, 2 or ``"platform"``. For links, ``s`` is the arc fraction from
    the proximal joint. For the platform, ``point`` holds the platform-frame
    coordinates of the point (default: platform origin) and ``chain``/``s`` are
    ignored.
    """

    chain: int = 1
    link: object = 1
    s: float = 0.5
    point: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.link not in (1, 2, "platform"):
            raise ValueError(f"link must be 1, 2 or 'platform', got {self.link!r}")
        if not 1 <= self.chain <= N_CHAINS:
            raise ValueError(f"chain must be in 1..{N_CHAINS}")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError("s must lie in [0, 1]")

    @property
    def on_platform(self):
        return self.link == "platform"


# ---------------------------------------------------------------------------
# positions


def elbow_positions(geom, q):
    a = _joints(q)
    return geom.base_anchor + geom.link1_len[:, None] * np.stack([np.cos(a[:, 0]), np.sin(a[:, 0])], axis=1)


def coupling_joint_positions(geom, q):
    """Serial forward kinematics of every chain up to its coupling joint, (3, 2)."""
    a = _joints(q)
    a12 = a[:, 0] + a[:, 1]
    return elbow_positions(geom, a) + geom.link2_len[:, None] * np.stack([np.cos(a12), np.sin(a12)], axis=1)


def platform_anchor_positions(geom, x):
    x = _pose(x)
    return x[:2] + geom.platform_anchor @ rot(x[2]).T


def platform_pose_from_joints(geom, q, chain=1):
    """Platform pose reconstructed through the serial kinematics of one chain."""
    a = _joints(q)
    i = chain - 1
    th = a[i].sum() - geom.anchor_angle[i]
    c = coupling_joint_positions(geom, a)[i]
    xt = c - rot(th) @ geom.platform_anchor[i]
    return np.array([xt[0], xt[1], wrap_angle(th)])


def contact_point(geom, q, loc):
    """World position of a structure point given the joint angles alone."""
    a = _joints(q)
    if loc.on_platform:
        x = platform_pose_from_joints(geom, a)
        return x[:2] + rot(x[2]) @ np.asarray(loc.point, dtype=float)
    i = loc.chain - 1
    qa, qp = a[i, 0], a[i, 1]
    if loc.link == 1:
        return geom.base_anchor[i] + loc.s * geom.link1_len[i] * _u(qa)
    return geom.base_anchor[i] + geom.link1_len[i] * _u(qa) + loc.s * geom.link2_len[i] * _u(qa + qp)


# ---------------------------------------------------------------------------
# constraints


def constraints_residual(geom, q, x):
    """Loop-closure residual R(q, x), 9 rows ``[dx, dy, dangle]`` per chain."""
    a = _joints(q)
    x = _pose(x)
    r = np.empty((N_CHAINS, 3))
    r[:, :2] = coupling_joint_positions(geom, a) - platform_anchor_positions(geom, x)
    r[:, 2] = wrap_angle(a.sum(axis=1) - x[2] - geom.anchor_angle)
    return r.reshape(-1)


def constraint_jacobians(geom, q, x):
    """Partial derivatives ``(R_dq, R_dx)`` of the loop-closure residual."""
    a = _joints(q)
    x = _pose(x)
    Rq = np.zeros((9, 9))
    Rx = np.zeros((9, 3))
    dRb = geom.platform_anchor @ rot(x[2] + np.pi / 2).T
    for i in range(N_CHAINS):
        qa, qp = a[i, 0], a[i, 1]
        l1, l2 = geom.link1_len[i], geom.link2_len[i]
        d2 = l2 * _uperp(qa + qp)
        k = 3 * i
        Rq[k:k + 2, k] = l1 * _uperp(qa) + d2
        Rq[k:k + 2, k + 1] = d2
        Rq[k + 2, k:k + 3] = 1.0
        Rx[k:k + 2, :2] = -np.eye(2)
        Rx[k:k + 2, 2] = -dRb[i]
        Rx[k + 2, 2] = -1.0
    return Rq, Rx


def constraint_jacobian_rates(geom, q, x, qdot, xdot):
    """Time derivatives of ``(R_dq, R_dx)`` along ``(qdot, xdot)``."""
    a = _joints(q)
    x = _pose(x)
    qd = np.asarray(qdot, dtype=float).reshape(N_CHAINS, 3)
    xd = np.asarray(xdot, dtype=float)
    Rq_dot = np.zeros((9, 9))
    Rx_dot = np.zeros((9, 3))
    Rb = geom.platform_anchor @ rot(x[2]).T
    for i in range(N_CHAINS):
        qa, qp = a[i, 0], a[i, 1]
        w1, w12 = qd[i, 0], qd[i, 0] + qd[i, 1]
        l1, l2 = geom.link1_len[i], geom.link2_len[i]
        d2 = -l2 * _u(qa + qp) * w12
        k = 3 * i
        Rq_dot[k:k + 2, k] = -l1 * _u(qa) * w1 + d2
        Rq_dot[k:k + 2, k + 1] = d2
        Rx_dot[k:k + 2, 2] = Rb[i] * xd[2]
    return Rq_dot, Rx_dot


def _check_cond(mat, what):
    c = np.linalg.cond(mat)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularJacobian(f"{what} is singular (cond={c:.3g})")


def check_serial_singularity(q, eps=1e-10):
    """R_dq is block diagonal with block determinants l1*l2*sin(qp)."""
    sp = np.abs(np.sin(_joints(q)[:, 1]))
    if np.any(sp < eps):
        raise SingularJacobian(f"R_dq is singular (stretched or folded chain {int(np.argmin(sp)) + 1})")


def jacobian_q_x(geom, q, x):
    """J_{q,x} = -R_dq^{-1} R_dx, maps platform rates to all 9 joint rates."""
    Rq, Rx = constraint_jacobians(geom, q, x)
    check_serial_singularity(q)
    return -np.linalg.solve(Rq, Rx)


# ---------------------------------------------------------------------------
# reduced constraints (passive angles eliminated)


def reduced_residual(geom, qa, x):
    """One scalar per chain: (|P_i - B_i|^2 - l2^2) / (2 l2), in metres."""
    qa = np.asarray(qa, dtype=float)
    v = platform_anchor_positions(geom, x) - geom.base_anchor - geom.link1_len[:, None] * np.stack(
        [np.cos(qa), np.sin(qa)], axis=1)
    l2 = geom.link2_len
    return (np.einsum("ij,ij->i", v, v) - l2 ** 2) / (2.0 * l2)


def reduced_jacobians(geom, qa, x):
    """``((R_red)_dx, (R_red)_dqa)``; the second one is diagonal."""
    qa = np.asarray(qa, dtype=float)
    x = _pose(x)
    v = platform_anchor_positions(geom, x) - geom.base_anchor - geom.link1_len[:, None] * np.stack(
        [np.cos(qa), np.sin(qa)], axis=1)
    v = v / geom.link2_len[:, None]
    dRb = geom.platform_anchor @ rot(x[2] + np.pi / 2).T
    Rx = np.empty((N_CHAINS, 3))
    Rx[:, :2] = v
    Rx[:, 2] = np.einsum("ij,ij->i", v, dRb)
    uperp = np.stack([-np.sin(qa), np.cos(qa)], axis=1)
    Rqa = np.diag(-geom.link1_len * np.einsum("ij,ij->i", v, uperp))
    return Rx, Rqa


def jacobian_x_qa(geom, q, x):
    """J_{x,qa} = -(R_red)_dx^{-1} (R_red)_dqa, maps drive rates to platform rates."""
    Rx, Rqa = reduced_jacobians(geom, _joints(q)[:, 0], x)
    _check_cond(Rx, "(R_red)_dx")
    return -np.linalg.solve(Rx, Rqa)


def forward_kinematics(geom, qa, x_guess, tol=1e-10, max_iter=20):
    """Platform pose from the drive angles by damped Newton-Raphson.

    The step is halved while it increases the residual. Raises
    :class:`NoConvergence` after ``max_iter`` iterations and
    :class:`SingularJacobian` when the reduced Jacobian w.r.t. ``x`` is
    rank-deficient.
    """
    qa = np.asarray(qa, dtype=float)
    x = _pose(x_guess).copy()
    r = reduced_residual(geom, qa, x)
    err = np.max(np.abs(r))
    for _ in range(max_iter):
        if err < tol:
            x[2] = wrap_angle(x[2])
            return x
        Rx, _ = reduced_jacobians(geom, qa, x)
        _check_cond(Rx, "(R_red)_dx")
        dx = -np.linalg.solve(Rx, r)
        step = 1.0
        for _ in range(30):
            x_new = x + step * dx
            r_new = reduced_residual(geom, qa, x_new)
            err_new = np.max(np.abs(r_new))
            if err_new < err:
                break
            step *= 0.5
        x, r, err = x_new, r_new, err_new
    if err < tol:
        x[2] = wrap_angle(x[2])
        return x
    raise NoConvergence(f"forward kinematics residual {err:.3g} after {max_iter} iterations")


# ---------------------------------------------------------------------------
# inverse kinematics


def inverse_kinematics(geom, x, branch=(1, 1, 1)):
    """Analytic inverse kinematics; ``branch[i]`` is the sign of the elbow angle of chain i+1."""
    x = _pose(x)
    P = platform_anchor_positions(geom, x)
    out = np.empty((N_CHAINS, 3))
    D = (P - geom.base_anchor).tolist()
    for i in range(N_CHAINS):
        l1, l2 = float(geom.link1_len[i]), float(geom.link2_len[i])
        dx, dy = D[i]
        c = (dx * dx + dy * dy - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
        if c > 1.0 + 1e-12 or c < -1.0 - 1e-12:
            raise Unreachable(i + 1)
        qp = (1.0 if branch[i] >= 0 else -1.0) * math.acos(min(1.0, max(-1.0, c)))
        qa = wrap_angle(math.atan2(dy, dx) - math.atan2(l2 * math.sin(qp), l1 + l2 * math.cos(qp)))
        qc = wrap_angle(float(x[2] + geom.anchor_angle[i]) - qa - qp)
        out[i] = (qa, qp, qc)
    return JointConfig(out)


def joints_from_actuated(geom, qa, x):
    """Complete the passive and coupling angles from drive angles and a closed pose."""
    qa = np.asarray(qa, dtype=float)
    x = _pose(x)
    v = platform_anchor_positions(geom, x) - elbow_positions(geom, np.column_stack([qa, qa, qa]))
    a12 = np.arctan2(v[:, 1], v[:, 0])
    qp = wrap_angle(a12 - qa)
    qc = wrap_angle(x[2] + geom.anchor_angle - a12)
    return JointConfig(np.column_stack([qa, qp, qc]))


# ---------------------------------------------------------------------------
# contact point Jacobians


class ContactJacobians(NamedTuple):
    J_xC_q: np.ndarray
    J_xC_x: np.ndarray
    J_xC_qa: np.ndarray


def contact_jacobian_q(geom, q, loc):
    """J_{xC,q}: 2x9 Jacobian of the serial kinematics of the contact point."""
    a = _joints(q)
    J = np.zeros((2, 9))
    if loc.on_platform:
        i = 0
        th = a[i].sum() - geom.anchor_angle[i]
        lever = rot(th + np.pi / 2) @ (np.asarray(loc.point, dtype=float) - geom.platform_anchor[i])
        qa, qp = a[i, 0], a[i, 1]
        l1, l2 = geom.link1_len[i], geom.link2_len[i]
        J[:, 0] = l1 * _uperp(qa) + l2 * _uperp(qa + qp) + lever
        J[:, 1] = l2 * _uperp(qa + qp) + lever
        J[:, 2] = lever
        return J
    i = loc.chain - 1
    qa, qp = a[i, 0], a[i, 1]
    l1, l2 = geom.link1_len[i], geom.link2_len[i]
    k = 3 * i
    if loc.link == 1:
        J[:, k] = loc.s * l1 * _uperp(qa)
    else:
        d2 = loc.s * l2 * _uperp(qa + qp)
        J[:, k] = l1 * _uperp(qa) + d2
        J[:, k + 1] = d2
    return J


def contact_jacobians(geom, q, x, loc, J_qx=None, J_xqa=None):
    """Contact-point Jacobians w.r.t. joints, platform pose and drives."""
    Jc = contact_jacobian_q(geom, q, loc)
    if J_qx is None:
        J_qx = jacobian_q_x(geom, q, x)
    if J_xqa is None:
        J_xqa = jacobian_x_qa(geom, q, x)
    Jx = Jc @ J_qx
    return ContactJacobians(Jc, Jx, Jx @ J_xqa)
