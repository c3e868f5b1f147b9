"""Reactive motion planner: zero-g fallback, retraction and structure opening."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import classifier as clf
from . import contact_geometry as cg
from . import kinematics as kin
from .errors import DegenerateGradient, InvalidLoA, SingularJacobian, UntrainedModel
from .trajectory import PoseLimits, constant_trajectory, jerk_limited_trajectory


class Mode(str, Enum):
    NONE = "none"
    RETRACTION = "retraction"
    RETRACTION_OPENING = "retraction+opening"
    STRUCTURE_OPENING = "structure-opening"
    ZERO_G = "zero-g"


STRATEGIES = ("auto", "RM", "SO", "RM+SO", "ZG", "none")


@dataclass
class ReactionThresholds:
    eps_r: np.ndarray = field(default_factory=lambda: np.array([10.0, 10.0, 1.0]))
    eps_g: np.ndarray = None

    def __post_init__(self):
        self.eps_r = np.asarray(self.eps_r, dtype=float).reshape(3)
        self.eps_g = 4.0 * self.eps_r if self.eps_g is None else np.asarray(self.eps_g, dtype=float).reshape(3)
        if np.any(self.eps_r <= 0) or np.any(self.eps_g <= self.eps_r):
            raise ValueError("thresholds must satisfy 0 < eps_r < eps_g componentwise")

    def exceeds_g(self, F):
        return bool(np.any(np.abs(F) >= self.eps_g))

    def exceeds_r(self, F):
        return bool(np.any(np.abs(F) >= self.eps_r))


@dataclass
class PlannerConfig:
    thresholds: ReactionThresholds = field(default_factory=ReactionThresholds)
    d_react: float = 0.05
    gamma: float = np.deg2rad(5.0)
    limits: PoseLimits = field(default_factory=PoseLimits)
    start_from_actual: bool = False
    strategy: str = "auto"
    f_min: float = cg.F_MIN

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.d_react < 0 or self.gamma < 0:
            raise ValueError("d_react and gamma must be non-negative")


@dataclass(frozen=True)
class ReactionPlan:
    mode: Mode
    target: np.ndarray = None
    trajectory: object = None
    stiffness: np.ndarray = None
    clamping: bool = None
    chain: int = None
    loa: cg.LineOfAction = None
    d: np.ndarray = None


def retraction_target(x_t, n_f, d_react):
    """New platform position ``d_react`` along the estimated force direction."""
    n_f = np.asarray(n_f, dtype=float)
    if not np.isfinite(n_f).all() or abs(np.linalg.norm(n_f) - 1.0) > 1e-9:
        raise InvalidLoA("force direction is not a unit vector")
    return np.asarray(x_t, dtype=float) + d_react * n_f


def opening_direction(geom, q, x, chain):
    """+1/-1: sign of the orientation change that opens the elbow of ``chain``."""
    s = cg.clamping_angle_gradient_sign(geom, q, x, chain)
    if s == 0:
        raise DegenerateGradient(f"clamping angle of chain {chain} is insensitive to the orientation")
    # q_cl = pi - |q_p|: on the negative elbow branch the angle grows with q_p
    qp = kin._joints(q)[chain - 1, 1]
    return -s if qp >= 0 else s


def opening_target(geom, q, x, chain, gamma):
    """Platform orientation ``x_r - sgn(dq_p/dx_r) |gamma|`` (sign flipped on the negative elbow branch)."""
    x = kin._pose(x)
    return kin.wrap_angle(x[2] + opening_direction(geom, q, x, chain) * abs(gamma))


def _rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(b):
    c, s = np.cos(b), np.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(g):
    c, s = np.cos(g), np.sin(g)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def tait_bryan_xyz(R):
    """Angles ``(a, b, c)`` with ``R = R_x(a) R_y(b) R_z(c)``, for ``|b| < pi/2``."""
    R = np.asarray(R, dtype=float)
    b = np.arcsin(np.clip(R[0, 2], -1.0, 1.0))
    a = np.arctan2(-R[1, 2], R[2, 2])
    c = np.arctan2(-R[0, 1], R[0, 0])
    return np.array([a, b, c])


def opening_rotation_spatial(R_mP, dqcl_dxr, magnitudes):
    """Structure opening for a platform with three rotational coordinates.

    The angles are ``sign(dq_cl/dx_r) * |magnitudes|`` element-wise, applied in
    the platform frame as ``R_x R_y R_z``. Returns the desired rotation and the
    Tait-Bryan residual of ``R_mP^T R_d``. Unused by the planar robot.
    """
    ang = np.sign(np.asarray(dqcl_dxr, dtype=float)) * np.abs(np.asarray(magnitudes, dtype=float))
    R_d = np.asarray(R_mP, dtype=float) @ _rx(ang[0]) @ _ry(ang[1]) @ _rz(ang[2])
    return R_d, tait_bryan_xyz(np.asarray(R_mP, dtype=float).T @ R_d)


def _zero_g(x):
    x = kin._pose(x)
    return ReactionPlan(Mode.ZERO_G, x.copy(), constant_trajectory(x), np.zeros(3))


def reactive_plan(F_hat, q, x, desired, geom, config, stiffness, classifiers=None, chain_hint=None):
    """One evaluation of the reactive planner.

    ``desired`` is the current ``(x_d, xdot_d, xddot_d)``; ``stiffness`` the
    impedance stiffness to use while reacting. ``classifiers`` is a
    ``(contact_model, chain_model)`` pair, required by the ``auto`` strategy.
    ``chain_hint`` names the clamped chain for the forced SO strategies.
    """
    F_hat = np.asarray(F_hat, dtype=float)
    x = kin._pose(x)
    th = config.thresholds
    strategy = config.strategy
    # "none" observes only (dataset recording)
    if strategy == "none" or not th.exceeds_r(F_hat):
        return ReactionPlan(Mode.NONE)
    if th.exceeds_g(F_hat):
        return _zero_g(x)
    if strategy == "ZG":
        return _zero_g(x)

    loa = cg.line_of_action(F_hat, config.f_min)
    if not loa.valid:
        return _zero_g(x)
    try:
        d = cg.min_distances(geom, q, loa, x)
    except SingularJacobian:
        return _zero_g(x)

    x_d = np.asarray(desired[0], dtype=float)
    if strategy == "auto":
        if not classifiers or classifiers[0] is None:
            raise UntrainedModel("the auto strategy needs trained classifiers")
        clamping = clf.classify_contact(classifiers[0], F_hat) == "clamping"
    else:
        clamping = strategy in ("SO", "RM+SO")

    d_react = 0.0 if strategy == "SO" else config.d_react
    target = np.empty(3)
    target[:2] = retraction_target(x[:2], loa.n_f, d_react)
    target[2] = x_d[2]
    chain = None
    mode = Mode.RETRACTION
    if clamping:
        if chain_hint is not None:
            chain = int(chain_hint)
        elif classifiers and classifiers[1] is not None:
            chain = clf.classify_chain(classifiers[1], F_hat, d)
        else:
            chain = int(np.argmin(d)) + 1
        try:
            target[2] = opening_target(geom, q, x, chain, config.gamma)
            mode = Mode.STRUCTURE_OPENING if strategy == "SO" else Mode.RETRACTION_OPENING
        except DegenerateGradient:
            pass
        except SingularJacobian:
            return _zero_g(x)

    if config.start_from_actual:
        start = (x, np.zeros(3), np.zeros(3))
    else:
        start = (x_d, np.asarray(desired[1], dtype=float), np.asarray(desired[2], dtype=float))
    # keep the orientation move on the short way round
    target[2] = start[0][2] + kin.wrap_angle(target[2] - start[0][2])
    traj = jerk_limited_trajectory(start, target, config.limits)
    return ReactionPlan(mode, target, traj, np.asarray(stiffness, dtype=float), clamping, chain, loa, d)


class ReactivePlanner:
    """Stateful wrapper adding hysteresis around :func:`reactive_plan`.

    Once a reaction runs, further ``eps_r`` crossings are ignored; only an
    ``eps_g`` crossing replaces it (by zero-g, which is final).
    """

    def __init__(self, geom, config, stiffness, classifiers=None, chain_hint=None):
        self.geom = geom
        self.config = config
        self.stiffness = np.asarray(stiffness, dtype=float)
        self.classifiers = classifiers
        self.chain_hint = chain_hint
        self.plan = ReactionPlan(Mode.NONE)
        self.t_start = None
        self.events = []

    @property
    def mode(self):
        return self.plan.mode

    def update(self, t, F_hat, q, x, desired):
        if self.plan.mode == Mode.ZERO_G:
            return self.plan
        if self.plan.mode != Mode.NONE:
            if self.config.thresholds.exceeds_g(F_hat):
                self._switch(t, _zero_g(x))
            return self.plan
        plan = reactive_plan(F_hat, q, x, desired, self.geom, self.config, self.stiffness,
                             self.classifiers, self.chain_hint)
        if plan.mode != Mode.NONE:
            self._switch(t, plan)
        return self.plan

    def _switch(self, t, plan):
        self.plan = plan
        self.t_start = t
        self.events.append((t, plan.mode))

    def desired(self, t):
        """Reaction setpoint at time ``t``, or None while no reaction runs."""
        if self.plan.mode == Mode.NONE:
            return None
        return self.plan.trajectory.sample(t - self.t_start)
