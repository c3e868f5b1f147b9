"""Acceptance criteria 1-11 at their stated tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) and then
asserts. Criterion 7 generates the full ~80k sample dataset and runs the grid
search, so this module takes several minutes.
"""
import os
import time

import numpy as np
import pytest

from prcontact import classifier as clf
from prcontact import kinematics as kin
from prcontact.cli import _load_grid, evaluate_pair, fit_pair
from prcontact.control import PAPER_STIFFNESS, ImpedanceConfig, control_force, pose_error
from prcontact.dynamics import DynamicsParams, RobotModel, compute_terms, kinetic_energy, potential_energy
from prcontact.dynamics import step_rk4, step_semi_implicit
from prcontact.observer import ObserverState, observer_step
from prcontact.sim.dataset import generate_dataset, load_matrix
from prcontact.sim.experiments import chain_feature, clamping_scenario, loa_recovery, reaction_comparison
from prcontact.sim.experiments import stiffness_trend
from prcontact.sim.harness import run_scenario
from prcontact.sim.scenario import load_scenario
from prcontact.trajectory import Limits, PoseLimits, jerk_limited_trajectory, scurve_duration

from conftest import GEOM, record, workspace_state

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")
LOCS = [kin.ContactLocation(c, l, s) for c in (1, 2, 3) for l, s in ((1, 0.3), (2, 0.7))] + [
    kin.ContactLocation(link="platform", point=(0.04, 0.03))]


def cfg(name):
    return os.path.join(CONFIGS, name)


def fd(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    return np.stack([(np.asarray(f(x + h * e)) - np.asarray(f(x - h * e))) / (2 * h) for e in np.eye(len(x))],
                    axis=-1)


def rel_err(A, B):
    return np.max(np.abs(A - B)) / max(np.max(np.abs(B)), 1e-12)


def test_criterion_01_jacobians():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_fd, worst_fact = 0.0, 0.0
    for k in range(1000):
        q, x = workspace_state(rng)
        J_qx = kin.jacobian_q_x(GEOM, q, x)
        J_xqa = kin.jacobian_x_qa(GEOM, q, x)
        ik = lambda xx: kin.inverse_kinematics(GEOM, xx).q
        fk = lambda qa: kin.forward_kinematics(GEOM, qa, x, tol=1e-14, max_iter=50)
        worst_fd = max(worst_fd, rel_err(J_qx, fd(ik, x)), rel_err(J_xqa, fd(fk, q.qa)))
        loc = LOCS[k % len(LOCS)]
        cj = kin.contact_jacobians(GEOM, q, x, loc, J_qx, J_xqa)
        point = lambda xx: kin.contact_point(GEOM, kin.inverse_kinematics(GEOM, xx), loc)
        worst_fd = max(worst_fd, rel_err(cj.J_xC_x, fd(point, x)))
        worst_fact = max(worst_fact, np.max(np.abs(cj.J_xC_x - cj.J_xC_q @ J_qx)),
                         np.max(np.abs(cj.J_xC_qa - cj.J_xC_x @ J_xqa)),
                         np.max(np.abs(J_xqa @ J_qx[kin.ACTIVE] - np.eye(3))))
    elapsed = time.perf_counter() - t0
    ok = worst_fd < 1e-6 and worst_fact < 1e-10 and elapsed < 10.0
    record(1, ok, f"max FD rel err {worst_fd:.2e}, factorization {worst_fact:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_dynamics_identities():
    model = RobotModel()
    rng = np.random.default_rng(2)
    min_eig = np.inf
    skew = 0.0
    for k in range(1000):
        q, x = workspace_state(rng)
        xdot = rng.normal(size=3) * [0.2, 0.2, 0.8]
        t = compute_terms(model, q, x, xdot)
        min_eig = min(min_eig, np.linalg.eigvalsh(t.M_x)[0])
        if k < 200:
            h = 1e-6
            M = lambda xx: compute_terms(model, model.joints(xx), xx, np.zeros(3)).M_x
            Mdot = (M(x + h * xdot) - M(x - h * xdot)) / (2 * h)
            skew = max(skew, np.max(np.abs(Mdot - (t.C_x + t.C_x.T))))

    fl = RobotModel(params=DynamicsParams(viscous=0.0, coulomb=0.0, gravity=[0.0, -9.81]))
    worst_energy = 0.0
    for run in range(3):
        x = np.array([0.01, -0.02, 0.1]) * (run - 1)
        xdot = np.zeros(3)
        E0 = potential_energy(fl, fl.joints(x), x)
        work = 0.0
        for k in range(1000):
            tk = k * 1e-3
            g = compute_terms(fl, fl.joints(x), x, np.zeros(3)).g_x
            F_m = g + np.array([1.5 * np.sin(6 * tk + run), np.cos(4 * tk), 0.05 * np.sin(9 * tk)])
            x_new, xdot = step_rk4(fl, x, xdot, F_m, np.zeros(3), 1e-3)
            work += F_m @ (x_new - x)
            x = x_new
        T = kinetic_energy(compute_terms(fl, fl.joints(x), x, xdot), xdot)
        dV = potential_energy(fl, fl.joints(x), x) - E0
        worst_energy = max(worst_energy, abs(T - (work - dV)) / abs(T))
    ok = min_eig > 0 and skew < 1e-6 and worst_energy < 1e-4
    record(2, ok, f"min eig(M_x) {min_eig:.3e}, skew residual {skew:.2e}, work-energy rel err {worst_energy:.2e}")
    assert ok


def test_criterion_03_observer_step():
    model = RobotModel(params=DynamicsParams(gravity=[0.0, -9.81]))
    x = np.array([0.02, -0.01, 0.1])
    t = compute_terms(model, model.joints(x), x, np.zeros(3))
    F = np.array([10.0, -6.0, 0.8])
    obs = ObserverState(1.0 / 0.050)
    H = []
    F_m = t.g_x
    for _ in range(2001):
        obs = observer_step(obs, t, F_m, 1e-3)
        H.append(obs.F_hat.copy())
        F_m = t.g_x - F
    H = np.array(H) / F
    ts = np.arange(len(H)) * 1e-3
    t63 = []
    for i in range(3):
        k = int(np.argmax(H[:, i] >= 1 - np.exp(-1)))
        t63.append(ts[k - 1] + (1 - np.exp(-1) - H[k - 1, i]) / (H[k, i] - H[k - 1, i]) * 1e-3)
    ss = np.max(np.abs(H[-1] - 1.0))
    ok = max(abs(v - 0.050) for v in t63) <= 1e-3 and ss < 1e-3
    record(3, ok, f"63.2% at {[round(float(v) * 1e3, 2) for v in t63]} ms, steady-state error {ss:.1e}")
    assert ok


def test_criterion_04_impedance_compliance():
    model = RobotModel()
    imp = ImpedanceConfig(K_d=PAPER_STIFFNESS)
    worst = 0.0
    for F_ext, x_d in (([6.0, -4.0, 0.5], [0.01, 0.0, 0.05]), ([-8.0, 3.0, -0.3], [-0.02, 0.02, -0.1])):
        F_ext, x_d = np.array(F_ext), np.array(x_d)
        x, xdot = x_d.copy(), np.zeros(3)
        for _ in range(2000):
            t = compute_terms(model, model.joints(x), x, xdot)
            F_m = control_force(model, imp, t, x, xdot, x_d, np.zeros(3), np.zeros(3))
            x, xdot = step_semi_implicit(model, x, xdot, F_m, F_ext, 1e-3, t)
        expected = -F_ext / imp.K_d
        worst = max(worst, np.max(np.abs(pose_error(x_d, x) - expected) / np.abs(expected)))
    ok = worst < 0.02
    record(4, ok, f"max relative deviation from K_d^-1 F_ext {worst:.2e}")
    assert ok


def test_criterion_05_line_of_action():
    clean = np.concatenate(loa_recovery())
    noisy = np.concatenate(loa_recovery(wrench_sigma=0.5, seed=10))
    ok = np.max(clean) < 1e-6 and np.median(noisy) < 5e-3
    record(5, ok, f"noise-free max {np.max(clean):.2e} m, sigma 0.5 N median {np.median(noisy) * 1e3:.2f} mm")
    assert ok


def test_criterion_06_chain_feature():
    rows = chain_feature()
    assert len(rows) == 9
    worst = max(r[2] for r in rows)
    argmin = min(r[3] for r in rows)
    ok = worst < 1e-3 and argmin == 1.0
    record(6, ok, f"3 chains x 3 configs: max d_i {worst:.2e} m, d_i minimal in {argmin:.0%} of samples")
    assert ok


@pytest.fixture(scope="module")
def dataset():
    t0 = time.perf_counter()
    ds = generate_dataset(load_matrix(cfg("matrix.yaml")), workers=os.cpu_count() or 1)
    return ds, time.perf_counter() - t0


def test_criterion_07_classifiers(dataset):
    ds, t_gen = dataset
    grid = _load_grid(cfg("grid.yaml"))
    t0 = time.perf_counter()
    contact, chain, _ = fit_pair(ds, grid, test_config=2, seed=0)
    t_train = time.perf_counter() - t0
    res = evaluate_pair(contact, chain, ds.subset(ds.config_id == 2))
    diag = np.diag(res["contact_confusion"])
    # the held-out set is collision heavy, so the contact score is the class-balanced accuracy
    ok = (res["contact_balanced_accuracy"] >= 0.80 and res["chain_accuracy"] >= 0.90
          and 60_000 <= len(ds) <= 100_000 and t_train < 600)
    record(7, ok, f"{len(ds)} samples ({t_gen:.0f} s); contact balanced acc "
                  f"{res['contact_balanced_accuracy']:.3f} (collision {diag[0]:.3f}, clamping {diag[1]:.3f}, "
                  f"plain {res['contact_accuracy']:.3f}); chain acc {res['chain_accuracy']:.3f}; "
                  f"training {t_train:.0f} s")
    assert ok


def test_criterion_08_reactions():
    coll = reaction_comparison(load_scenario(cfg("platform_collision.yaml")), ("RM", "ZG"))
    rm, zg = coll["RM"], coll["ZG"]
    durations = {}
    for chain in (1, 2, 3):
        r = reaction_comparison(clamping_scenario(cfg("clamping.yaml"), chain), ("RM", "SO", "RM+SO"))
        for k, v in r.items():
            durations[(chain, k)] = v.reaction_duration
    clamp_ok = all(v is not None and v <= 0.130 for v in durations.values())
    ok = (rm.reaction_duration is not None and rm.reaction_duration <= 0.130 and clamp_ok
          and zg.reaction_duration is not None and zg.reaction_duration < rm.reaction_duration)
    worst = max((v for v in durations.values() if v is not None), default=float("nan"))
    record(8, ok, f"collision RM {rm.reaction_duration * 1e3:.0f} ms, ZG {zg.reaction_duration * 1e3:.0f} ms; "
                  f"clamping RM/SO/RM+SO on chains 1-3 worst {worst * 1e3:.0f} ms")
    assert ok


def test_criterion_09_stiffness_trend():
    dt = 1e-3
    details = []
    ok = True
    for name in ("platform_collision.yaml", "link_collision.yaml", "clamping.yaml"):
        s = load_scenario(cfg(name))
        s.planner.strategy = "RM"
        rows = stiffness_trend(s)
        dur = [r["reaction_duration"] for r in rows]
        ok &= all(d is not None for d in dur)
        ok &= all(b <= a + dt + 1e-12 for a, b in zip(dur, dur[1:]))
        details.append(f"{name.split('.')[0]} " + "/".join(f"{d * 1e3:.0f}" for d in dur) + " ms")
    record(9, ok, "2 -> 0.1 N/mm at 0.4 m/s: " + "; ".join(details))
    assert ok


def test_criterion_10_trajectory():
    rng = np.random.default_rng(10)
    dt = 1e-3
    worst_lim, worst_dur = 0.0, 0.0
    cases = [(0.05, Limits(0.5, 5.0, 100.0))] + [
        (rng.uniform(-0.2, 0.2), Limits(rng.uniform(0.05, 1), rng.uniform(0.5, 20), rng.uniform(10, 2000)))
        for _ in range(200)]
    for h, lim in cases:
        traj = jerk_limited_trajectory((np.zeros(1), np.zeros(1), np.zeros(1)), [h], lim)
        ts, x, v, a = traj.sampled(dt)
        j = np.array([traj.jerk(t)[0] for t in ts])
        worst_lim = max(worst_lim, np.max(np.abs(v)) / lim.v_max, np.max(np.abs(a)) / lim.a_max,
                        np.max(np.abs(j)) / lim.j_max)
        done = np.flatnonzero((np.abs(x[:, 0] - h) < 1e-12) & (np.abs(v[:, 0]) < 1e-12))[0]
        worst_dur = max(worst_dur, abs(ts[done] - scurve_duration(h, lim)))
    traj = jerk_limited_trajectory((np.zeros(3), np.zeros(3), np.zeros(3)), [0.05, -0.03, 0.1], PoseLimits())
    sync = max(abs(p.duration - traj.duration) for p in traj.profiles)
    ok = worst_lim <= 1 + 1e-9 and worst_dur <= dt and sync < 1e-12
    record(10, ok, f"peak |v|,|a|,|j| / limit {worst_lim:.9f}, duration error {worst_dur * 1e3:.3f} ms")
    assert ok


def test_criterion_11_determinism(tmp_path):
    same = []
    for name in ("platform_collision.yaml", "clamping.yaml", "link_collision.yaml"):
        s = load_scenario(cfg(name))
        s.noise.velocity_sigma = 1e-3
        s.noise.torque_sigma = 0.01
        paths = [tmp_path / f"{name}.{k}.csv" for k in range(2)]
        for p in paths:
            run_scenario(s).trace.write_csv(p)
        same.append(paths[0].read_bytes() == paths[1].read_bytes())
    ok = all(same)
    record(11, ok, f"bit-identical CSV traces for {sum(same)}/{len(same)} scenarios (with sensor noise)")
    assert ok
