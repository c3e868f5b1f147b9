"""Scenario description, YAML loading and automatic obstacle placement.

Config values are SI numbers or quantity strings (``"2 N/mm"``, ``"5 deg"``,
``"50 mm"``). See the README for the full schema.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import yaml

from .. import kinematics as kin
from ..control import ImpedanceConfig
from ..dynamics import DynamicsParams, RobotModel
from ..errors import ConfigError
from ..observer import DEFAULT_GAIN
from ..planner import PlannerConfig, ReactionThresholds
from ..trajectory import Limits, PoseLimits, jerk_limited_trajectory
from .contact_model import ClampedObject, Obstacle
from .units import to_si, vec_si

CONTACT_TYPES = ("none", "collision", "clamping")
# link points squeezing a clamped object (mid-link on both links)
CLAMP_POINTS = (0.5, 0.5)


@dataclass
class TaskSpec:
    """Preplanned straight platform move, optionally returning to the start."""

    direction: object = "auto"
    speed: float = 0.25
    distance: float = 0.1
    rotation: float = 0.0
    a_max: float = 2.0
    j_max: float = 50.0
    dwell: float = 0.0
    return_to_start: bool = False

    def __post_init__(self):
        if self.speed <= 0 or self.distance < 0:
            raise ConfigError("task speed must be positive and distance non-negative")


@dataclass
class ContactSpec:
    type: str = "none"
    locations: list = field(default_factory=list)
    contact_distance: float = 0.04
    obstacle_radius: float = 0.02
    stiffness: float = 1e4
    damping: float = 50.0
    obstacle_center: object = None

    def __post_init__(self):
        if self.type not in CONTACT_TYPES:
            raise ConfigError(f"contact type must be one of {CONTACT_TYPES}")
        if self.stiffness <= 0:
            raise ConfigError("obstacle stiffness must be positive")
        if self.type == "clamping" and len(self.locations) != 2:
            raise ConfigError("a clamping contact needs exactly two link locations")
        if self.type == "collision" and not self.locations:
            raise ConfigError("a collision needs a contact location")

    @property
    def chain(self):
        """Ground-truth chain of a link contact or clamping, 0 for the platform."""
        if not self.locations or self.locations[0].on_platform:
            return 0
        return self.locations[0].chain


@dataclass
class NoiseSpec:
    velocity_sigma: float = 0.0
    torque_sigma: float = 0.0
    wrench_sigma: float = 0.0


@dataclass
class Scenario:
    model: RobotModel = field(default_factory=RobotModel)
    initial_pose: np.ndarray = field(default_factory=lambda: np.zeros(3))
    task: TaskSpec = field(default_factory=TaskSpec)
    contact: ContactSpec = field(default_factory=ContactSpec)
    impedance: ImpedanceConfig = field(default_factory=ImpedanceConfig)
    observer_gain: np.ndarray = field(default_factory=lambda: np.full(3, DEFAULT_GAIN))
    planner: PlannerConfig = field(default_factory=lambda: PlannerConfig(strategy="RM"))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    dt: float = 1e-3
    duration: float = 0.8
    seed: int = 0
    sweep: dict = field(default_factory=dict)
    name: str = "scenario"
    chain_hint: int = None
    measure_pose_by_fk: bool = True

    def __post_init__(self):
        self.initial_pose = np.asarray(self.initial_pose, dtype=float).reshape(3)
        self.observer_gain = np.broadcast_to(np.asarray(self.observer_gain, dtype=float), (3,)).copy()
        if self.dt <= 0 or self.duration <= 0:
            raise ConfigError("dt and duration must be positive")

    def replace(self, **changes):
        s = copy.deepcopy(self)
        for k, v in changes.items():
            setattr(s, k, v)
        return s


# ---------------------------------------------------------------------------
# automatic geometry of the task and obstacle


def _elbow_gradient(model, x, chain):
    """d|q_p,i| / d x_t at pose x."""
    q = model.joints(x)
    J = kin.jacobian_q_x(model.geometry, q, x)
    i = chain - 1
    return np.sign(q.qp[i]) * J[kin.PASSIVE[i], :2]


def task_direction(scenario):
    """Unit translation direction of the preplanned move."""
    task, contact, model = scenario.task, scenario.contact, scenario.model
    if not isinstance(task.direction, str):
        d = np.asarray(task.direction, dtype=float)
        return d / np.linalg.norm(d)
    x0 = scenario.initial_pose
    if contact.type == "clamping":
        g = _elbow_gradient(model, x0, contact.chain)
        return g / np.linalg.norm(g)
    if contact.type == "collision":
        loc = contact.locations[0]
        if loc.on_platform:
            d = kin.rot(x0[2]) @ np.asarray(loc.point, dtype=float)
            if np.linalg.norm(d) < 1e-12:
                return np.array([1.0, 0.0])
            return d / np.linalg.norm(d)
        # fastest motion of the contact point, on the side that opens the elbow
        q = model.joints(x0)
        cj = kin.contact_jacobians(model.geometry, q, x0, loc)
        _, _, Vt = np.linalg.svd(cj.J_xC_x[:, :2])
        d = Vt[0]
        if d @ _elbow_gradient(model, x0, loc.chain) > 0:
            d = -d
        return d
    return np.array([1.0, 0.0])


def preplanned_waypoints(scenario):
    d = task_direction(scenario)
    x0 = scenario.initial_pose
    t = scenario.task
    x1 = x0 + np.array([d[0] * t.distance, d[1] * t.distance, t.rotation])
    return x0, x1


def pose_along_task(scenario, path_length):
    d = task_direction(scenario)
    t = scenario.task
    frac = path_length / t.distance if t.distance > 0 else 0.0
    return scenario.initial_pose + np.array([d[0] * path_length, d[1] * path_length, frac * t.rotation])


def place_obstacle(scenario):
    """Obstacle touching the contact location(s) once the task has travelled ``contact_distance``."""
    c = scenario.contact
    if c.type == "none":
        return None
    model = scenario.model
    if c.obstacle_center is not None and c.type == "collision":
        return Obstacle(c.obstacle_center, c.obstacle_radius, c.stiffness, c.damping)
    xc = pose_along_task(scenario, c.contact_distance)
    q = model.joints(xc)
    geom = model.geometry
    if c.type == "clamping":
        p1 = kin.contact_point(geom, q, c.locations[0])
        p2 = kin.contact_point(geom, q, c.locations[1])
        return ClampedObject(float(np.linalg.norm(p1 - p2)), c.stiffness, c.damping)
    loc = c.locations[0]
    p = kin.contact_point(geom, q, loc)
    d = task_direction(scenario)
    v = kin.contact_jacobians(geom, q, xc, loc).J_xC_x @ np.array([d[0], d[1], 0.0])
    n = v / np.linalg.norm(v)
    return Obstacle(p + c.obstacle_radius * n, c.obstacle_radius, c.stiffness, c.damping)


class Preplanned:
    """The task trajectory: out, dwell, optionally back."""

    def __init__(self, scenario):
        t = scenario.task
        x0, x1 = preplanned_waypoints(scenario)
        lim = PoseLimits(Limits(t.speed, t.a_max, t.j_max), PoseLimits().rotation)
        z = np.zeros(3)
        self.out = jerk_limited_trajectory((x0, z, z), x1, lim)
        self.back = jerk_limited_trajectory((x1, z, z), x0, lim) if t.return_to_start else None
        self.t_back = self.out.duration + t.dwell

    def sample(self, t):
        if self.back is not None and t >= self.t_back:
            return self.back.sample(t - self.t_back)
        return self.out.sample(t)


# ---------------------------------------------------------------------------
# YAML


def _location(d):
    link = d.get("link", 1)
    if isinstance(link, str) and link.isdigit():
        link = int(link)
    point = tuple(vec_si(d.get("point", [0.0, 0.0]), 2, "contact point"))
    return kin.ContactLocation(int(d.get("chain", 1)), link, float(d.get("s", 0.5)), point)


def contact_from_dict(d):
    d = dict(d or {})
    typ = d.get("type", "none")
    if typ == "clamping" and "locations" not in d:
        ch = int(d.get("chain", 1))
        locs = [kin.ContactLocation(ch, 1, CLAMP_POINTS[0]), kin.ContactLocation(ch, 2, CLAMP_POINTS[1])]
    else:
        locs = [_location(l) for l in d.get("locations", [])]
    center = d.get("obstacle_center")
    return ContactSpec(
        type=typ, locations=locs,
        contact_distance=to_si(d.get("contact_distance", 0.04), "contact_distance"),
        obstacle_radius=to_si(d.get("obstacle_radius", 0.02), "obstacle_radius"),
        stiffness=to_si(d.get("stiffness", 1e4), "obstacle stiffness"),
        damping=to_si(d.get("damping", 50.0), "obstacle damping"),
        obstacle_center=None if center is None else np.array(vec_si(center, 2, "obstacle_center")),
    )


def model_from_dict(d):
    d = dict(d or {})
    g = dict(d.get("geometry", {}))
    if "base_anchor" in g:
        geom = kin.RobotGeometry(
            [vec_si(p, 2, "base_anchor") for p in g["base_anchor"]],
            [vec_si(p, 2, "platform_anchor") for p in g["platform_anchor"]],
            vec_si(g.get("l1", 0.25), 3, "l1"), vec_si(g.get("l2", 0.25), 3, "l2"))
    else:
        geom = kin.RobotGeometry.symmetric(
            to_si(g.get("base_radius", 0.4)), to_si(g.get("platform_radius", 0.1)),
            to_si(g.get("l1", 0.25)), to_si(g.get("l2", 0.25)))
    p = dict(d.get("dynamics", {}))
    kw = {}
    for key in ("link1_mass", "link2_mass", "link1_com", "link2_com", "viscous", "coulomb"):
        if key in p:
            kw[key] = vec_si(p[key], 3, key)
    for key in ("link1_inertia", "link2_inertia"):
        if key in p:
            kw[key] = vec_si(p[key], 3, key)
    for key in ("platform_mass", "platform_inertia", "platform_radius", "coulomb_width"):
        if key in p:
            kw[key] = to_si(p[key], key)
    if "gravity" in p:
        kw["gravity"] = vec_si(p["gravity"], 2, "gravity")
    return RobotModel(geom, DynamicsParams(**kw), tuple(d.get("branch", (1, 1, 1))))


def _pose_from(d):
    if isinstance(d, (list, tuple)):
        return np.array(vec_si(d, 3, "pose"))
    d = dict(d or {})
    return np.array([to_si(d.get("x", 0.0)), to_si(d.get("y", 0.0)), to_si(d.get("phi", 0.0))])


def scenario_from_dict(d):
    try:
        return _scenario_from_dict(dict(d or {}))
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _scenario_from_dict(d):
    model = model_from_dict(d.get("robot"))
    t = dict(d.get("task", {}))
    direction = t.get("direction", "auto")
    if not isinstance(direction, str):
        direction = vec_si(direction, 2, "direction")
    task = TaskSpec(direction, to_si(t.get("speed", 0.25)), to_si(t.get("distance", 0.1)),
                    to_si(t.get("rotation", 0.0)), to_si(t.get("a_max", 2.0)), to_si(t.get("j_max", 50.0)),
                    to_si(t.get("dwell", 0.0)), bool(t.get("return_to_start", False)))
    c = dict(d.get("controller", {}))
    K = vec_si(c.get("K_d", ["2 N/mm", "2 N/mm", "85 N*m/rad"]), 3, "K_d")
    imp = ImpedanceConfig(K, vec_si(c.get("D_xi", 1.0), 3, "D_xi"),
                          to_si(c.get("reaction_stiffness", K[0]), "reaction_stiffness"),
                          None if c.get("torque_limit") is None else to_si(c["torque_limit"]))
    o = dict(d.get("observer", {}))
    if "time_constant" in o:
        gain = [1.0 / v for v in vec_si(o["time_constant"], 3, "time_constant")]
    else:
        gain = vec_si(o.get("gain", DEFAULT_GAIN), 3, "observer gain")
    pl = dict(d.get("planner", {}))
    eps_r = vec_si(pl.get("eps_r", [10.0, 10.0, 1.0]), 3, "eps_r")
    if "eps_g" in pl:
        eps_g = vec_si(pl["eps_g"], 3, "eps_g")
    else:
        eps_g = [float(pl.get("eps_g_factor", 4.0)) * e for e in eps_r]
    lim = dict(pl.get("limits", {}))
    tl = dict(lim.get("translation", {}))
    rl = dict(lim.get("rotation", {}))
    dl = PoseLimits()
    limits = PoseLimits(
        Limits(to_si(tl.get("v_max", dl.translation.v_max)), to_si(tl.get("a_max", dl.translation.a_max)),
               to_si(tl.get("j_max", dl.translation.j_max))),
        Limits(to_si(rl.get("v_max", dl.rotation.v_max)), to_si(rl.get("a_max", dl.rotation.a_max)),
               to_si(rl.get("j_max", dl.rotation.j_max))))
    planner = PlannerConfig(ReactionThresholds(eps_r, eps_g), to_si(pl.get("d_react", 0.05)),
                            to_si(pl.get("gamma", "5 deg")), limits, bool(pl.get("start_from_actual", False)),
                            str(pl.get("strategy", "RM")), to_si(pl.get("f_min", 1.0)))
    n = dict(d.get("noise", {}))
    noise = NoiseSpec(to_si(n.get("velocity_sigma", 0.0)), to_si(n.get("torque_sigma", 0.0)),
                      to_si(n.get("wrench_sigma", 0.0)))
    sw = dict(d.get("sweep", {}))
    sweep = {k: [to_si(v, k) for v in sw[k]] for k in ("velocity", "stiffness") if k in sw}
    hint = d.get("chain_hint")
    return Scenario(model, _pose_from(d.get("initial_pose")), task, contact_from_dict(d.get("contact")),
                    imp, gain, planner, noise, to_si(d.get("dt", 1e-3)), to_si(d.get("duration", 0.8)),
                    int(d.get("seed", 0)), sweep, str(d.get("name", "scenario")),
                    None if hint is None else int(hint), bool(d.get("measure_pose_by_fk", True)))


def load_scenario(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return scenario_from_dict(data)


def _loc_dict(loc):
    if loc.on_platform:
        return {"link": "platform", "point": [float(v) for v in loc.point]}
    return {"chain": loc.chain, "link": loc.link, "s": float(loc.s)}


def scenario_to_dict(s):
    """SI-valued dict that :func:`scenario_from_dict` maps back to an equal scenario."""
    g = s.model.geometry
    p = s.model.params
    pl = s.planner
    lim = pl.limits
    return {
        "name": s.name, "dt": s.dt, "duration": s.duration, "seed": s.seed,
        "robot": {
            "geometry": {"base_anchor": g.base_anchor.tolist(), "platform_anchor": g.platform_anchor.tolist(),
                         "l1": g.link1_len.tolist(), "l2": g.link2_len.tolist()},
            "branch": list(s.model.branch),
            "dynamics": {
                "link1_mass": p.link1_mass.tolist(), "link2_mass": p.link2_mass.tolist(),
                "link1_inertia": p.link1_inertia.tolist(), "link2_inertia": p.link2_inertia.tolist(),
                "link1_com": p.link1_com.tolist(), "link2_com": p.link2_com.tolist(),
                "platform_mass": p.platform_mass, "platform_inertia": p.platform_inertia,
                "platform_radius": p.platform_radius, "viscous": p.viscous.tolist(),
                "coulomb": p.coulomb.tolist(), "coulomb_width": p.coulomb_width, "gravity": p.gravity.tolist()},
        },
        "initial_pose": s.initial_pose.tolist(),
        "task": {"direction": s.task.direction if isinstance(s.task.direction, str) else list(map(float, s.task.direction)),
                 "speed": s.task.speed, "distance": s.task.distance, "rotation": s.task.rotation,
                 "a_max": s.task.a_max, "j_max": s.task.j_max, "dwell": s.task.dwell,
                 "return_to_start": s.task.return_to_start},
        "contact": {"type": s.contact.type, "locations": [_loc_dict(l) for l in s.contact.locations],
                    "contact_distance": s.contact.contact_distance, "obstacle_radius": s.contact.obstacle_radius,
                    "stiffness": s.contact.stiffness, "damping": s.contact.damping,
                    **({} if s.contact.obstacle_center is None
                       else {"obstacle_center": np.asarray(s.contact.obstacle_center).tolist()})},
        "controller": {"K_d": s.impedance.K_d.tolist(), "D_xi": s.impedance.D_xi.tolist(),
                       "reaction_stiffness": s.impedance.reaction_stiffness,
                       "torque_limit": s.impedance.torque_limit},
        "observer": {"gain": s.observer_gain.tolist()},
        "planner": {"strategy": pl.strategy, "eps_r": pl.thresholds.eps_r.tolist(),
                    "eps_g": pl.thresholds.eps_g.tolist(), "d_react": pl.d_react, "gamma": pl.gamma,
                    "start_from_actual": pl.start_from_actual, "f_min": pl.f_min,
                    "limits": {"translation": vars(lim.translation).copy(), "rotation": vars(lim.rotation).copy()}},
        "noise": vars(s.noise).copy(),
        "sweep": {k: list(v) for k, v in s.sweep.items()},
        "chain_hint": s.chain_hint,
        "measure_pose_by_fk": s.measure_pose_by_fk,
    }


def dump_scenario(s, path):
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(s), fh, sort_keys=False)
