"""Closed 1 kHz loop: plant, observer, reactive planner and impedance controller."""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import contact_geometry as cg
from .. import kinematics as kin
from ..control import control_force
from ..dynamics import compute_terms, step_semi_implicit
from ..errors import PRContactError, SimDiverged
from ..observer import ObserverState, observer_step
from ..planner import Mode, ReactivePlanner
from .contact_model import ContactModel
from .scenario import Preplanned, place_obstacle

TRACE_COLUMNS = (
    "t", "x", "y", "phi", "xdot", "ydot", "phidot", "x_d", "y_d", "phi_d",
    "Fm_x", "Fm_y", "Fm_phi", "f_C", "Fext_x", "Fext_y", "Fext_phi",
    "Fhat_x", "Fhat_y", "Fhat_phi", "mode", "d1", "d2", "d3",
)
ZERO_HOLD = 0.010


@dataclass
class Summary:
    contact_time: float = None
    detection_time: float = None
    termination_time: float = None
    f_C_max: float = 0.0
    mode: str = Mode.NONE.value
    chain: int = None
    clamping: bool = None

    @property
    def reaction_duration(self):
        """Time from detection to contact termination, None if either is missing."""
        if self.detection_time is None or self.termination_time is None:
            return None
        return self.termination_time - self.detection_time

    def as_dict(self):
        return {
            "contact_time": self.contact_time, "detection_time": self.detection_time,
            "termination_time": self.termination_time, "reaction_duration": self.reaction_duration,
            "f_C_max": self.f_C_max, "mode": self.mode, "chain": self.chain, "clamping": self.clamping,
        }


@dataclass
class Trace:
    columns: tuple = TRACE_COLUMNS
    rows: list = field(default_factory=list)

    def column(self, name):
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])

    def array(self, names):
        idx = [self.columns.index(n) for n in names]
        return np.array([[r[k] for k in idx] for r in self.rows], dtype=float)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([v if isinstance(v, str) else repr(float(v)) for v in r])


class RunResult:
    def __init__(self, trace, summary, planner):
        self.trace = trace
        self.summary = summary
        self.planner = planner


def termination_time(t, f_C, t_detect, hold=ZERO_HOLD, dt=None):
    """Start of the first run of ``f_C == 0`` after ``t_detect`` lasting at least ``hold``."""
    if t_detect is None:
        return None
    t = np.asarray(t)
    f_C = np.asarray(f_C)
    if dt is None:
        dt = t[1] - t[0] if len(t) > 1 else 0.0
    start = None
    for k in range(len(t)):
        if t[k] < t_detect:
            continue
        if f_C[k] == 0.0:
            if start is None:
                start = t[k]
            if t[k] - start >= hold - 0.5 * dt:
                return float(start)
        else:
            start = None
    return None


def _finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def run_scenario(scenario, classifiers=None, record_d=True):
    """Simulate one scenario. Deterministic for a fixed scenario and seed.

    ``classifiers`` is the ``(contact_model, chain_model)`` pair used by the
    ``auto`` strategy. Raises :class:`SimDiverged` on a non-finite or
    unreachable plant state.
    """
    s = scenario
    model = s.model
    geom = model.geometry
    rng = np.random.default_rng(s.seed)
    dt = s.dt
    n_steps = int(round(s.duration / dt)) + 1
    task = Preplanned(s)
    contact = ContactModel(place_obstacle(s), list(s.contact.locations))
    planner = ReactivePlanner(geom, s.planner, s.impedance.reaction_gains(), classifiers, s.chain_hint)
    obs = ObserverState(s.observer_gain)

    x = s.initial_pose.copy()
    xdot = np.zeros(3)
    x_meas = x.copy()
    F_m = np.zeros(3)
    desired = task.sample(0.0)
    trace = Trace()
    summary = Summary()
    nan3 = np.full(3, np.nan)

    for k in range(n_steps):
        t = k * dt
        try:
            q = model.joints(x)
            terms = compute_terms(model, q, x, xdot)
        except PRContactError as exc:
            raise SimDiverged(f"plant left the workspace at t={t:.3f} s: {exc}") from exc
        forces = contact.evaluate(geom, q, x, xdot, terms.J_qx)

        # measurement: pose from the drive angles, velocity with optional noise
        if s.measure_pose_by_fk:
            try:
                x_meas = kin.forward_kinematics(geom, q.qa, x_meas)
            except PRContactError:
                x_meas = x.copy()
        else:
            x_meas = x.copy()
        xdot_meas = xdot
        if s.noise.velocity_sigma > 0:
            xdot_meas = xdot + rng.normal(0.0, s.noise.velocity_sigma, 3)
        if xdot_meas is xdot and np.max(np.abs(x_meas - x)) < 1e-9:
            # measurement matches the plant state: share its terms
            q_meas, est = q, terms
        else:
            q_meas = model.joints(x_meas)
            est = compute_terms(model, q_meas, x_meas, xdot_meas)

        F_m_obs = F_m
        if s.noise.torque_sigma > 0:
            tau = est.J_xqa.T @ F_m + rng.normal(0.0, s.noise.torque_sigma, 3)
            F_m_obs = np.linalg.solve(est.J_xqa.T, tau)
        obs = observer_step(obs, est, F_m_obs, dt)
        F_hat = obs.F_hat
        if s.noise.wrench_sigma > 0:
            sig = s.noise.wrench_sigma
            F_hat = F_hat + rng.normal(0.0, 1.0, 3) * np.array([sig, sig, sig * model.params.platform_radius])

        plan = planner.update(t, F_hat, q_meas, x_meas, desired)
        if summary.detection_time is None:
            if plan.mode != Mode.NONE or s.planner.thresholds.exceeds_r(F_hat):
                summary.detection_time = t
        if plan.mode == Mode.NONE:
            desired = task.sample(t)
            K = None
        else:
            desired = planner.desired(t)
            K = plan.stiffness

        if plan.mode == Mode.ZERO_G:
            F_m = est.g_x.copy()
        else:
            F_m = control_force(model, s.impedance, est, x_meas, xdot_meas, *desired, K_d=K)

        d = nan3
        if record_d:
            loa = cg.line_of_action(F_hat, s.planner.f_min)
            if loa.valid:
                try:
                    d = cg.min_distances(geom, q_meas, loa, x_meas)
                except PRContactError:
                    d = nan3
        trace.rows.append((t, *x, *xdot, *desired[0], *F_m, forces.f_C, *forces.F_ext, *F_hat,
                           plan.mode.value, *d))
        if forces.f_C > 0 and summary.contact_time is None:
            summary.contact_time = t
        summary.f_C_max = max(summary.f_C_max, forces.f_C)

        x, xdot = step_semi_implicit(model, x, xdot, F_m, forces.F_ext, dt, terms)
        if not _finite(x, xdot, F_m):
            raise SimDiverged(f"non-finite state at t={t:.3f} s")

    summary.mode = planner.mode.value
    summary.chain = planner.plan.chain
    summary.clamping = planner.plan.clamping
    summary.termination_time = termination_time(trace.column("t"), trace.column("f_C"),
                                                 summary.detection_time, dt=dt)
    return RunResult(trace, summary, planner)


SWEEP_AXES = ("velocity", "stiffness")
DEFAULT_SWEEP = {"velocity": [0.05, 0.1, 0.2, 0.3, 0.42], "stiffness": [100.0, 500.0, 1000.0, 2000.0]}


def sweep_scenarios(scenario, axis, values=None):
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
    values = values if values is not None else scenario.sweep.get(axis, DEFAULT_SWEEP[axis])
    out = []
    for v in values:
        s = scenario.replace()
        if axis == "velocity":
            s.task.speed = float(v)
        else:
            s.impedance.reaction_stiffness = float(v)
            s.impedance.__post_init__()
        out.append((float(v), s))
    return out


def _summary_of(s):
    return run_scenario(s).summary


def sweep(scenario, axis, values=None, workers=1):
    """One run per grid value; rows of ``{value, f_C_max, termination_time, ...}``."""
    items = sweep_scenarios(scenario, axis, values)
    scen = [s for _, s in items]
    if workers > 1 and len(scen) > 1:
        with ProcessPoolExecutor(workers) as ex:
            summaries = list(ex.map(_summary_of, scen))
    else:
        summaries = [_summary_of(s) for s in scen]
    return [{"axis": axis, "value": v, **sm.as_dict()} for (v, _), sm in zip(items, summaries)]


def write_table(rows, path):
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
