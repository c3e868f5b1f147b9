"""Line of action of the estimated wrench and the chain-distance feature."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import kinematics as kin
from .errors import InvalidLoA

F_MIN = 1.0
SIGN_DEAD_ZONE = 1e-9


class LineOfAction(NamedTuple):
    r_mP_LoA: np.ndarray
    n_f: np.ndarray
    valid: bool

    def point(self, lam):
        return self.r_mP_LoA + lam * self.n_f


def skew(v):
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def min_lever_spatial(f, m):
    """Minimum-norm lever ``r`` with ``r x f = m`` via the pseudoinverse of ``S(f)^T``.

    General 3D form; the planar robot uses :func:`line_of_action`.
    """
    return np.linalg.pinv(skew(f).T) @ np.asarray(m, dtype=float)


def line_of_action(F_hat, f_min=F_MIN):
    """Minimum-norm lever from the platform origin to the LoA and the force direction.

    The lever is expressed in world-aligned axes at the platform origin, the
    frame the wrench moment is taken in.
    """
    fx, fy, mz = (float(v) for v in F_hat)
    f2 = fx * fx + fy * fy
    fn = np.sqrt(f2)
    if fn < f_min or fn == 0.0:
        return LineOfAction(np.zeros(2), np.zeros(2), False)
    r = mz * np.array([fy, -fx]) / f2
    return LineOfAction(r, np.array([fx, fy]) / fn, True)


def distances_to_line(points, line_point, direction):
    """Perpendicular distances of ``points`` (n, 2) to a line."""
    rel = np.asarray(points, dtype=float) - np.asarray(line_point, dtype=float)
    return np.abs(kin.cross2(rel, np.asarray(direction, dtype=float)))


def min_distances(geom, q, loa, x=None):
    """Distance of every coupling joint to the LoA, shape (3,).

    Coupling joints are taken relative to the platform origin; ``x`` defaults to
    the pose reconstructed from ``q``.
    """
    if not loa.valid:
        raise InvalidLoA("line of action undefined for a force below f_min")
    if x is None:
        x = kin.platform_pose_from_joints(geom, q)
    r_cJ = kin.coupling_joint_positions(geom, q) - np.asarray(x)[:2]
    return distances_to_line(r_cJ, loa.r_mP_LoA, loa.n_f)


def passive_rate_wrt_rotation(geom, q, x, chain):
    """``dq_p,i / dx_r`` from the ``J_{q,x}`` entry."""
    J = kin.jacobian_q_x(geom, q, x)
    return J[kin.PASSIVE[chain - 1], 2]


def clamping_angle_gradient_sign(geom, q, x, chain):
    """sign(dq_p,i/dx_r) in {-1, 0, +1}; magnitudes below 1e-9 count as 0."""
    g = passive_rate_wrt_rotation(geom, q, x, chain)
    if abs(g) < SIGN_DEAD_ZONE:
        return 0
    return 1 if g > 0 else -1


def clamping_angle(qp):
    """Interior elbow angle ``pi - |q_p|``."""
    return np.pi - np.abs(qp)


def features(F_hat, d):
    return np.concatenate([np.asarray(F_hat, dtype=float), np.asarray(d, dtype=float)])
