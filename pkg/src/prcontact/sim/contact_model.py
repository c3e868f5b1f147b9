"""Penalty contact between structure points and a fixed circular obstacle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .. import kinematics as kin


@dataclass
class Obstacle:
    center: np.ndarray
    radius: float
    stiffness: float = 1e4
    damping: float = 50.0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(2)
        if self.stiffness <= 0:
            raise ValueError("obstacle stiffness must be positive")
        if self.radius < 0 or self.damping < 0:
            raise ValueError("obstacle radius and damping must be non-negative")


@dataclass
class ClampedObject:
    """Compliant object of free length ``rest_length`` squeezed between two structure points."""

    rest_length: float
    stiffness: float = 1e4
    damping: float = 50.0

    def __post_init__(self):
        if self.stiffness <= 0:
            raise ValueError("object stiffness must be positive")
        if self.rest_length <= 0 or self.damping < 0:
            raise ValueError("rest length must be positive and damping non-negative")


def normal_force(penetration, penetration_rate, stiffness, damping):
    """Unilateral spring-damper: zero when separated, never pulling."""
    if penetration <= 0.0:
        return 0.0
    return max(0.0, stiffness * penetration + damping * penetration_rate)


class ContactForces(NamedTuple):
    link_forces: list  # (ContactLocation, force (2,)) for active contacts
    F_ext: np.ndarray
    f_C: float


@dataclass
class ContactModel:
    obstacle: Obstacle | None
    locations: list = field(default_factory=list)

    def evaluate(self, geom, q, x, xdot, J_qx=None):
        """Contact forces on the structure and their platform wrench."""
        F = np.zeros(3)
        active = []
        f_C = 0.0
        if self.obstacle is None:
            return ContactForces(active, F, f_C)
        ob = self.obstacle
        if isinstance(ob, ClampedObject):
            return self._clamp(geom, q, x, xdot, J_qx)
        for loc in self.locations:
            p = kin.contact_point(geom, q, loc)
            rel = p - ob.center
            dist = float(np.hypot(rel[0], rel[1]))
            pen = ob.radius - dist
            if pen <= 0.0:
                continue
            if J_qx is None:
                J_qx = kin.jacobian_q_x(geom, q, x)
            Jx = kin.contact_jacobian_q(geom, q, loc) @ J_qx
            n = rel / dist if dist > 0 else np.array([1.0, 0.0])
            pen_rate = -float(n @ (Jx @ xdot))
            fn = normal_force(pen, pen_rate, ob.stiffness, ob.damping)
            if fn == 0.0:
                continue
            f = fn * n
            active.append((loc, f))
            F += Jx.T @ f
            f_C = max(f_C, fn)
        return ContactForces(active, F, f_C)

    def _clamp(self, geom, q, x, xdot, J_qx):
        ob = self.obstacle
        l1, l2 = self.locations
        rel = kin.contact_point(geom, q, l1) - kin.contact_point(geom, q, l2)
        dist = float(np.hypot(rel[0], rel[1]))
        pen = ob.rest_length - dist
        if pen <= 0.0 or dist == 0.0:
            return ContactForces([], np.zeros(3), 0.0)
        if J_qx is None:
            J_qx = kin.jacobian_q_x(geom, q, x)
        J1 = kin.contact_jacobian_q(geom, q, l1) @ J_qx
        J2 = kin.contact_jacobian_q(geom, q, l2) @ J_qx
        n = rel / dist
        pen_rate = -float(n @ ((J1 - J2) @ xdot))
        fn = normal_force(pen, pen_rate, ob.stiffness, ob.damping)
        if fn == 0.0:
            return ContactForces([], np.zeros(3), 0.0)
        f = fn * n
        F = J1.T @ f - J2.T @ f
        return ContactForces([(l1, f), (l2, -f)], F, fn)
