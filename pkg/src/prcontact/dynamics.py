"""Operational-space rigid-body dynamics of the 3-RRR robot.

The links of each chain form a serial two-link arm in the joint angles
``(qa, qp)``; the platform is a rigid body in the pose ``x``. Joint-space terms
are projected onto ``x`` through ``J_{q,x}``::

    M_x = J^T M_q J + M_P
    C_x = J^T M_q dJ/dt + J^T C_q J

which keeps ``dM_x/dt = C_x + C_x^T`` exact because the serial-arm ``C_q`` is
built from Christoffel symbols.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kinematics as kin
from .errors import SingularJacobian


def _vec3(v):
    return np.broadcast_to(np.asarray(v, dtype=float), (kin.N_CHAINS,)).copy()


@dataclass
class DynamicsParams:
    link1_mass: np.ndarray = 0.5
    link2_mass: np.ndarray = 0.5
    link1_inertia: np.ndarray = None
    link2_inertia: np.ndarray = None
    link1_com: np.ndarray = 0.5
    link2_com: np.ndarray = 0.5
    platform_mass: float = 1.0
    platform_inertia: float = None
    platform_radius: float = 0.1
    viscous: np.ndarray = 0.01
    coulomb: np.ndarray = 0.05
    coulomb_width: float = 1e-3
    gravity: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name in ("link1_mass", "link2_mass", "link1_com", "link2_com", "viscous", "coulomb"):
            setattr(self, name, _vec3(getattr(self, name)))
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(2)
        if self.platform_inertia is None:
            self.platform_inertia = 0.5 * self.platform_mass * self.platform_radius ** 2
        if np.any(self.link1_mass < 0) or np.any(self.link2_mass < 0) or self.platform_mass < 0:
            raise ValueError("masses must be non-negative")
        if np.any(self.coulomb < 0) or np.any(self.viscous < 0):
            raise ValueError("friction coefficients must be non-negative")

    def resolve_inertias(self, geom):
        """Fill missing link inertias with slender-rod values ``m l^2 / 12``."""
        if self.link1_inertia is None:
            self.link1_inertia = self.link1_mass * geom.link1_len ** 2 / 12.0
        if self.link2_inertia is None:
            self.link2_inertia = self.link2_mass * geom.link2_len ** 2 / 12.0
        self.link1_inertia = _vec3(self.link1_inertia)
        self.link2_inertia = _vec3(self.link2_inertia)
        if np.any(self.link1_inertia < 0) or np.any(self.link2_inertia < 0) or self.platform_inertia < 0:
            raise ValueError("inertias must be non-negative")


@dataclass
class RobotModel:
    geometry: kin.RobotGeometry = field(default_factory=kin.RobotGeometry.symmetric)
    params: DynamicsParams = field(default_factory=DynamicsParams)
    branch: tuple = (1, 1, 1)

    def __post_init__(self):
        self.params.resolve_inertias(self.geometry)
        self.branch = tuple(int(np.sign(b)) or 1 for b in self.branch)

    def joints(self, x):
        """Joint angles of the (fixed) assembly branch for pose ``x``."""
        return kin.inverse_kinematics(self.geometry, x, self.branch)

    def frictionless(self):
        p = DynamicsParams(**{k: getattr(self.params, k) for k in self.params.__dataclass_fields__})
        p.viscous = np.zeros(3)
        p.coulomb = np.zeros(3)
        return RobotModel(self.geometry, p, self.branch)


class DynamicsTerms(NamedTuple):
    M_x: np.ndarray
    C_x: np.ndarray
    g_x: np.ndarray
    F_fr_x: np.ndarray
    J_qx: np.ndarray
    J_xqa: np.ndarray
    qdot: np.ndarray
    xdot: np.ndarray

    @property
    def c_x(self):
        return self.C_x @ self.xdot


def chain_inertia(params, geom, i, qp, qa_dot, qp_dot):
    """Inertia and Coriolis matrices of serial arm ``i`` in ``(qa, qp)``."""
    l1 = geom.link1_len[i]
    m1, m2 = params.link1_mass[i], params.link2_mass[i]
    lc1 = params.link1_com[i] * l1
    lc2 = params.link2_com[i] * geom.link2_len[i]
    I1, I2 = params.link1_inertia[i], params.link2_inertia[i]
    c, s = np.cos(qp), np.sin(qp)
    m22 = I2 + m2 * lc2 ** 2
    m12 = m22 + m2 * l1 * lc2 * c
    m11 = I1 + m1 * lc1 ** 2 + m22 + m2 * l1 ** 2 + 2.0 * m2 * l1 * lc2 * c
    h = -m2 * l1 * lc2 * s
    M = np.array([[m11, m12], [m12, m22]])
    C = np.array([[h * qp_dot, h * (qa_dot + qp_dot)], [-h * qa_dot, 0.0]])
    return M, C


def chain_gravity(params, geom, i, qa, qp):
    """Gradient of the potential -sum(m g.p) w.r.t. ``(qa, qp)``."""
    g = params.gravity
    l1 = geom.link1_len[i]
    m1, m2 = params.link1_mass[i], params.link2_mass[i]
    lc1 = params.link1_com[i] * l1
    lc2 = params.link2_com[i] * geom.link2_len[i]
    up1 = kin._uperp(qa)
    up12 = kin._uperp(qa + qp)
    return np.array([
        -m1 * lc1 * g @ up1 - m2 * g @ (l1 * up1 + lc2 * up12),
        -m2 * lc2 * g @ up12,
    ])


def joint_space_terms(model, q, qdot):
    """9x9 ``M_q``, ``C_q`` and 9-vector ``g_q`` of the unconstrained chains."""
    a = kin._joints(q)
    qd = np.asarray(qdot, dtype=float).reshape(3, 3)
    Mq = np.zeros((9, 9))
    Cq = np.zeros((9, 9))
    gq = np.zeros(9)
    p, geom = model.params, model.geometry
    for i in range(kin.N_CHAINS):
        M, C = chain_inertia(p, geom, i, a[i, 1], qd[i, 0], qd[i, 1])
        k = 3 * i
        Mq[k:k + 2, k:k + 2] = M
        Cq[k:k + 2, k:k + 2] = C
        if np.any(p.gravity):
            gq[k:k + 2] = chain_gravity(p, geom, i, a[i, 0], a[i, 1])
    return Mq, Cq, gq


def drive_friction(params, qa_dot):
    """Viscous plus tanh-smoothed Coulomb drive friction torques."""
    qa_dot = np.asarray(qa_dot, dtype=float)
    return params.viscous * qa_dot + params.coulomb * np.tanh(qa_dot / params.coulomb_width)


def compute_terms(model, q, x, xdot, qdot=None):
    """Operational-space ``M_x, C_x, g_x, F_fr_x`` at state ``(q, x, xdot)``.

    ``qdot`` is derived from ``xdot`` when omitted.
    """
    geom, p = model.geometry, model.params
    x = kin._pose(x)
    xdot = np.asarray(xdot, dtype=float)
    Rq, Rx = kin.constraint_jacobians(geom, q, x)
    kin.check_serial_singularity(q)
    J = -np.linalg.solve(Rq, Rx)
    if qdot is None:
        qdot = J @ xdot
    Rq_dot, Rx_dot = kin.constraint_jacobian_rates(geom, q, x, qdot, xdot)
    J_dot = -np.linalg.solve(Rq, Rq_dot @ J + Rx_dot)
    Mq, Cq, gq = joint_space_terms(model, q, qdot)
    JtM = J.T @ Mq
    M_x = JtM @ J
    M_x[0, 0] += p.platform_mass
    M_x[1, 1] += p.platform_mass
    M_x[2, 2] += p.platform_inertia
    M_x = 0.5 * (M_x + M_x.T)
    C_x = JtM @ J_dot + J.T @ Cq @ J
    g_x = J.T @ gq
    g_x[:2] -= p.platform_mass * p.gravity
    J_xqa = kin.jacobian_x_qa(geom, q, x)
    tau_fr = drive_friction(p, qdot[kin.ACTIVE])
    F_fr = np.linalg.solve(J_xqa.T, tau_fr)
    return DynamicsTerms(M_x, C_x, g_x, F_fr, J, J_xqa, np.asarray(qdot, dtype=float), xdot)


def forward_dynamics(model, x, xdot, F_m, F_ext, terms=None):
    """Platform acceleration from Lagrange's equations in operational space."""
    if terms is None:
        terms = compute_terms(model, model.joints(x), x, xdot)
    rhs = np.asarray(F_m, dtype=float) + np.asarray(F_ext, dtype=float) - terms.C_x @ xdot - terms.g_x - terms.F_fr_x
    return np.linalg.solve(terms.M_x, rhs)


def step_semi_implicit(model, x, xdot, F_m, F_ext, dt, terms=None):
    """One fixed step, velocity first. Returns ``(x, xdot)``."""
    xdd = forward_dynamics(model, x, xdot, F_m, F_ext, terms)
    xdot = np.asarray(xdot, dtype=float) + dt * xdd
    return np.asarray(x, dtype=float) + dt * xdot, xdot


def step_rk4(model, x, xdot, F_m, F_ext, dt):
    """Classical Runge-Kutta step with the forces held over the interval."""
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)

    def f(xx, vv):
        return vv, forward_dynamics(model, xx, vv, F_m, F_ext)

    k1x, k1v = f(x, xdot)
    k2x, k2v = f(x + 0.5 * dt * k1x, xdot + 0.5 * dt * k1v)
    k3x, k3v = f(x + 0.5 * dt * k2x, xdot + 0.5 * dt * k2v)
    k4x, k4v = f(x + dt * k3x, xdot + dt * k3v)
    return (x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
            xdot + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


def potential_energy(model, q, x):
    geom, p = model.geometry, model.params
    if not np.any(p.gravity):
        return 0.0
    a = kin._joints(q)
    x = kin._pose(x)
    V = -p.platform_mass * p.gravity @ x[:2]
    for i in range(kin.N_CHAINS):
        qa, qp = a[i, 0], a[i, 1]
        l1 = geom.link1_len[i]
        c1 = geom.base_anchor[i] + p.link1_com[i] * l1 * kin._u(qa)
        c2 = geom.base_anchor[i] + l1 * kin._u(qa) + p.link2_com[i] * geom.link2_len[i] * kin._u(qa + qp)
        V -= p.gravity @ (p.link1_mass[i] * c1 + p.link2_mass[i] * c2)
    return float(V)


def kinetic_energy(terms, xdot):
    return 0.5 * float(xdot @ terms.M_x @ xdot)


def project_link_force(model, q, x, loc, F_link, J_qx=None, J_xqa=None):
    """Platform wrench and drive torques equivalent to a force at a structure point.

    Returns ``(F_ext_mP, tau_a_ext)``.
    """
    cj = kin.contact_jacobians(model.geometry, q, x, loc, J_qx, J_xqa)
    F_link = np.asarray(F_link, dtype=float)
    return cj.J_xC_x.T @ F_link, cj.J_xC_qa.T @ F_link


def actuation_map(model, q, x, F_m):
    """Drive torques realising the operational-space force ``F_m``."""
    return kin.jacobian_x_qa(model.geometry, q, x).T @ np.asarray(F_m, dtype=float)


def wrench_from_torques(model, q, x, tau_a):
    """Inverse of :func:`actuation_map`."""
    J = kin.jacobian_x_qa(model.geometry, q, x)
    return np.linalg.solve(J.T, np.asarray(tau_a, dtype=float))


__all__ = [
    "DynamicsParams", "RobotModel", "DynamicsTerms", "SingularJacobian",
    "compute_terms", "forward_dynamics", "project_link_force", "actuation_map",
    "wrench_from_torques", "kinetic_energy", "potential_energy", "drive_friction",
    "step_semi_implicit", "step_rk4",
]
