"""Experiment drivers shared by the scripts and the acceptance suite."""
from __future__ import annotations

import numpy as np

from .. import contact_geometry as cg
from .. import kinematics as kin
from .dataset import build_matrix
from .harness import run_scenario, sweep
from .scenario import Preplanned, load_scenario, scenario_from_dict

PLATFORM_POINTS = ((0.1, 0.0), (0.05, 0.05), (-0.06, 0.03), (0.0, -0.08), (0.07, -0.07))
REACTIONS = ("ZG", "RM", "SO", "RM+SO")


def _settled_window(scenario, dwell, settle):
    """Run ``scenario`` pressing into the contact and holding; mask of the settled samples."""
    s = scenario
    s.task.dwell = dwell
    pre = Preplanned(s)
    s.duration = pre.t_back
    tr = run_scenario(s).trace
    return tr, tr.column("t") > pre.out.duration + settle


def loa_recovery(points=PLATFORM_POINTS, wrench_sigma=0.0, seed=0, dwell=1.5, settle=1.0):
    """Distances between true platform contact points and the estimated line of action.

    Quasi-static presses against an obstacle at each platform point, observer
    output taken after it settles. Returns one array of distances per point.
    """
    out = []
    for k, pt in enumerate(points):
        s = scenario_from_dict({
            "task": {"speed": 0.05, "distance": 0.03},
            "contact": {"type": "collision", "locations": [{"link": "platform", "point": list(pt)}],
                        "contact_distance": 0.02},
            "planner": {"strategy": "none"}, "noise": {"wrench_sigma": wrench_sigma}, "seed": seed + k})
        tr, m = _settled_window(s, dwell, settle)
        x = tr.array(("x", "y", "phi"))[m]
        Fh = tr.array(("Fhat_x", "Fhat_y", "Fhat_phi"))[m]
        d = []
        for xk, Fk in zip(x, Fh):
            loa = cg.line_of_action(Fk)
            p = kin.rot(xk[2]) @ np.asarray(pt)
            d.append(cg.distances_to_line(p[None], loa.r_mP_LoA, loa.n_f)[0] if loa.valid else np.inf)
        out.append(np.array(d))
    return out


def chain_feature(matrix=None):
    """Per clamping scenario: ``(config_id, chain, max d_chain, share of samples where d_chain is minimal)``.

    Evaluated over every sample with a valid line of action.
    """
    rows = []
    for e in build_matrix({"dwell": 0.5, **(matrix or {})}):
        if e.label == 0:
            continue
        s = e.scenario
        s.duration = Preplanned(s).t_back
        d = run_scenario(s).trace.array(("d1", "d2", "d3"))
        d = d[np.all(np.isfinite(d), axis=1)]
        i = e.label - 1
        rows.append((e.config_id, e.label, float(np.max(d[:, i])), float(np.mean(np.argmin(d, axis=1) == i)),
                     len(d)))
    return rows


def reaction_comparison(scenario, strategies=REACTIONS):
    """Summary per reaction strategy for one contact scenario."""
    out = {}
    for st in strategies:
        s = scenario.replace()
        s.planner.strategy = st
        out[st] = run_scenario(s).summary
    return out


def clamping_scenario(path, chain):
    s = load_scenario(path)
    loc = [kin.ContactLocation(chain, l.link, l.s) for l in s.contact.locations]
    s.contact.locations = loc
    s.chain_hint = chain
    return s


def stiffness_trend(scenario, values=(2000.0, 1000.0, 500.0, 100.0), speed=0.4, workers=1):
    """Sweep rows from stiff to compliant at the given task speed."""
    s = scenario.replace()
    s.task.speed = speed
    return sweep(s, "stiffness", list(values), workers=workers)


__all__ = ["loa_recovery", "chain_feature", "reaction_comparison", "clamping_scenario", "stiffness_trend",
           "PLATFORM_POINTS", "REACTIONS"]
