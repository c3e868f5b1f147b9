"""Cartesian impedance control in operational space."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .dynamics import drive_friction
from .errors import NotSPD

# 2 N/mm, 2 N/mm, 85 Nm/rad
PAPER_STIFFNESS = (2000.0, 2000.0, 85.0)

FRICTION_VEL_EPS = 1e-3


@dataclass
class ImpedanceConfig:
    K_d: np.ndarray = field(default_factory=lambda: np.array(PAPER_STIFFNESS))
    D_xi: np.ndarray = field(default_factory=lambda: np.ones(3))
    reaction_stiffness: float = 2000.0
    torque_limit: float | None = None

    def __post_init__(self):
        self.K_d = np.asarray(self.K_d, dtype=float).reshape(3)
        self.D_xi = np.broadcast_to(np.asarray(self.D_xi, dtype=float), (3,)).copy()
        if np.any(self.K_d <= 0) or np.any(self.D_xi <= 0):
            raise ValueError("stiffness and damping ratios must be positive")
        if not 0.0 <= self.reaction_stiffness <= min(self.K_d[:2]):
            raise ValueError("reaction stiffness must lie in [0, K_t,d]")

    def reaction_gains(self):
        """Stiffness with the translational part lowered for a contact reaction."""
        K = self.K_d.copy()
        K[:2] = self.reaction_stiffness
        return K


def spd_sqrt(A):
    A = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(A)
    if w[0] <= 0.0:
        raise NotSPD(f"matrix is not positive definite (min eigenvalue {w[0]:.3g})")
    return (V * np.sqrt(w)) @ V.T


def damping_matrix(M_x, K_d, D_xi):
    """Factorization damping design ``D = M~ Dxi K~ + K~ Dxi M~``."""
    K_d = np.asarray(K_d, dtype=float)
    if np.any(K_d < 0):
        raise ValueError("stiffness must be non-negative")
    Ms = spd_sqrt(np.asarray(M_x, dtype=float))
    Ks = np.diag(np.sqrt(K_d))
    Dx = np.diag(np.asarray(D_xi, dtype=float))
    return Ms @ Dx @ Ks + Ks @ Dx @ Ms


def pose_error(x_d, x):
    e = np.asarray(x_d, dtype=float) - np.asarray(x, dtype=float)
    e[2] = kin.wrap_angle(e[2])
    return e


def control_force(model, config, terms, x, xdot, x_d, xdot_d, xddot_d, K_d=None):
    """Impedance control force ``F_m`` with model compensation.

    ``terms`` are the (estimated) dynamics terms at the current state. ``K_d``
    overrides the configured stiffness, which is how reactions switch to a
    softer setting at runtime.
    """
    K = config.K_d if K_d is None else np.asarray(K_d, dtype=float)
    # damping follows the active stiffness; a zero-stiffness axis is undamped
    D = damping_matrix(terms.M_x, K, config.D_xi)
    e = pose_error(x_d, x)
    ed = np.asarray(xdot_d, dtype=float) - xdot
    F_fr = friction_compensation(model, terms, xdot_d)
    F = terms.C_x @ xdot + terms.g_x + terms.M_x @ np.asarray(xddot_d, dtype=float) + F_fr + K * e + D @ ed
    if config.torque_limit is not None:
        tau = np.clip(terms.J_xqa.T @ F, -config.torque_limit, config.torque_limit)
        F = np.linalg.solve(terms.J_xqa.T, tau)
    return F


def friction_compensation(model, terms, xdot_d):
    """Drive friction estimate; drives slower than 1e-3 rad/s use the desired rate."""
    qa_dot = terms.qdot[kin.ACTIVE]
    slow = np.abs(qa_dot) < FRICTION_VEL_EPS
    if not np.any(slow):
        return terms.F_fr_x
    qa_dot_d = np.linalg.solve(terms.J_xqa, np.asarray(xdot_d, dtype=float))
    rate = np.where(slow, qa_dot_d, qa_dot)
    return np.linalg.solve(terms.J_xqa.T, drive_friction(model.params, rate))
