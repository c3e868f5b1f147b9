import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from prcontact import classifier as clf
from prcontact import contact_geometry as cg
from prcontact import kinematics as kin
from prcontact.errors import DegenerateGradient, InvalidLoA, UntrainedModel
from prcontact.planner import (Mode, PlannerConfig, ReactionThresholds, ReactivePlanner, opening_direction,
                               opening_rotation_spatial, opening_target, reactive_plan, retraction_target,
                               tait_bryan_xyz)

from conftest import GEOM, workspace_state

K_REACT = np.array([2000.0, 2000.0, 85.0])
X0 = np.zeros(3)
Q0 = kin.inverse_kinematics(GEOM, X0)
REST = (X0, np.zeros(3), np.zeros(3))


def plan(F, strategy="RM", x=X0, q=Q0, desired=REST, chain_hint=None, **kw):
    return reactive_plan(F, q, x, desired, GEOM, PlannerConfig(strategy=strategy, **kw), K_REACT,
                         chain_hint=chain_hint)


def test_threshold_validation():
    with pytest.raises(ValueError):
        ReactionThresholds([10, 10, 1], [40, 5, 4])
    with pytest.raises(ValueError):
        ReactionThresholds([0, 10, 1])
    assert np.allclose(ReactionThresholds().eps_g, [40, 40, 4])
    with pytest.raises(ValueError):
        PlannerConfig(strategy="bogus")


def test_retraction_example():
    p = plan([12.0, 0.0, 0.0])
    assert p.mode == Mode.RETRACTION
    assert np.allclose(p.target, [0.05, 0.0, 0.0])
    assert np.allclose(p.trajectory.target, p.target)
    assert np.array_equal(p.stiffness, K_REACT)


def test_zero_g_example_and_dominance():
    assert plan([45.0, 0.0, 0.0]).mode == Mode.ZERO_G
    for strategy in ("RM", "SO", "RM+SO", "ZG"):
        p = plan([0.0, 41.0, 0.0], strategy)
        assert p.mode == Mode.ZERO_G
        assert np.allclose(p.target, X0)
        assert np.all(p.stiffness == 0)


def test_below_threshold_continues():
    assert plan([9.9, -9.9, 0.99]).mode == Mode.NONE
    assert plan([100.0, 0.0, 0.0], strategy="none").mode == Mode.NONE


def test_retraction_target():
    assert np.allclose(retraction_target([0.1, 0.2], [0.0, 1.0], 0.05), [0.1, 0.25])
    assert np.allclose(retraction_target([0.1, 0.2], [0.6, 0.8], 0.0), [0.1, 0.2])
    with pytest.raises(InvalidLoA):
        retraction_target([0, 0], [1.0, 1.0], 0.05)


@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(0.0, 0.05))
def test_retraction_keeps_orientation(fx_frac, fy_frac, phi):
    x = np.array([0.01, -0.01, phi])
    q = kin.inverse_kinematics(GEOM, x)
    F = np.array([15.0 + 10 * fx_frac, 20 * fy_frac, 0.3])
    desired = (x + [0, 0, 0.01], np.zeros(3), np.zeros(3))
    p = reactive_plan(F, q, x, desired, GEOM, PlannerConfig(strategy="RM"), K_REACT)
    assert p.mode == Mode.RETRACTION and not p.clamping
    assert p.target[2] == pytest.approx(desired[0][2])
    # retraction moves along the estimated force direction
    n = F[:2] / np.linalg.norm(F[:2])
    assert np.allclose(p.target[:2] - x[:2], 0.05 * n)


def test_trajectory_starts_at_desired_state():
    desired = (np.array([0.002, 0.0, 0.0]), np.array([0.1, 0.0, 0.0]), np.zeros(3))
    p = plan([12.0, 0.0, 0.0], desired=desired)
    x, v, a = p.trajectory.sample(0.0)
    assert np.allclose(x, desired[0]) and np.allclose(v, desired[1])
    x, v, a = p.trajectory.sample(p.trajectory.duration)
    assert np.allclose(x, p.target) and np.allclose(v, 0.0) and np.allclose(a, 0.0)
    actual = plan([12.0, 0.0, 0.0], desired=desired, start_from_actual=True)
    assert np.allclose(actual.trajectory.sample(0.0)[0], X0)


def test_opening_target_examples(rng):
    for _ in range(50):
        q, x = workspace_state(rng)
        for chain in (1, 2, 3):
            assert opening_target(GEOM, q, x, chain, 0.0) == pytest.approx(x[2])
            s = cg.clamping_angle_gradient_sign(GEOM, q, x, chain)
            qp = q.qp[chain - 1]
            if s > 0 and qp >= 0:
                assert opening_target(GEOM, q, x, chain, np.deg2rad(5)) == pytest.approx(x[2] - np.deg2rad(5))


def test_opening_increases_clamping_angle(rng):
    """Finite-step check: the returned orientation step opens the elbow."""
    checked = 0
    for _ in range(300):
        q, x = workspace_state(rng)
        for chain in (1, 2, 3):
            if abs(cg.passive_rate_wrt_rotation(GEOM, q, x, chain)) < 1e-3:
                continue
            target = opening_target(GEOM, q, x, chain, 1e-4)
            q2 = kin.inverse_kinematics(GEOM, [x[0], x[1], target])
            assert cg.clamping_angle(q2.qp[chain - 1]) > cg.clamping_angle(q.qp[chain - 1])
            checked += 1
    assert checked > 500


def test_degenerate_gradient():
    # the symmetric home pose has no orientation sensitivity on the elbows
    assert any(cg.clamping_angle_gradient_sign(GEOM, Q0, X0, c) == 0 for c in (1, 2, 3))
    for chain in (1, 2, 3):
        if cg.clamping_angle_gradient_sign(GEOM, Q0, X0, chain) == 0:
            with pytest.raises(DegenerateGradient):
                opening_direction(GEOM, Q0, X0, chain)
            p = plan([12.0, 0.0, 0.0], strategy="RM+SO", chain_hint=chain)
            assert p.mode == Mode.RETRACTION and p.clamping


def test_structure_opening_modes():
    x = np.array([0.0, 0.0, np.deg2rad(20)])
    q = kin.inverse_kinematics(GEOM, x)
    cfg = PlannerConfig(strategy="SO")
    p = reactive_plan([12.0, 3.0, 0.5], q, x, (x, np.zeros(3), np.zeros(3)), GEOM, cfg, K_REACT, chain_hint=2)
    assert p.mode == Mode.STRUCTURE_OPENING and p.chain == 2
    assert np.allclose(p.target[:2], x[:2])
    assert abs(abs(p.target[2] - x[2]) - np.deg2rad(5)) < 1e-12
    cfg = PlannerConfig(strategy="RM+SO")
    p = reactive_plan([12.0, 3.0, 0.5], q, x, (x, np.zeros(3), np.zeros(3)), GEOM, cfg, K_REACT)
    assert p.mode == Mode.RETRACTION_OPENING
    assert p.chain == int(np.argmin(p.d)) + 1


@given(st.lists(st.floats(-39, 39), min_size=2, max_size=2), st.floats(-3.9, 3.9),
       st.lists(st.floats(0, 10), min_size=3, max_size=3))
def test_threshold_monotonicity(f, m, extra):
    F = np.array([*f, m])
    assume(plan(F).mode == Mode.RETRACTION)
    G = np.sign(F) * np.minimum(np.abs(F) + extra * np.array([1, 1, 0.1]), [39.9, 39.9, 3.99])
    assert plan(G).mode == Mode.RETRACTION


def test_small_force_with_large_moment_falls_back():
    assert plan([0.5, 0.0, 2.0]).mode == Mode.ZERO_G


def test_auto_needs_classifiers():
    with pytest.raises(UntrainedModel):
        plan([12.0, 0.0, 0.0], strategy="auto")


def test_auto_uses_classifiers(rng):
    X = rng.normal(size=(200, 3))
    y = (X[:, 0] > 0).astype(int)
    contact, _ = clf.train(clf.FnnModel.init(3, [8], 2, classes=[0, 1]), X, y,
                           clf.TrainConfig(epochs=40, lr=1e-2, batch=16))
    Xc = rng.normal(size=(200, 6))
    chain, _ = clf.train(clf.FnnModel.init(6, [8], 3, classes=[1, 2, 3]), Xc, rng.integers(1, 4, 200),
                         clf.TrainConfig(epochs=1))
    x = np.array([0.0, 0.0, np.deg2rad(20)])
    q = kin.inverse_kinematics(GEOM, x)
    cfg = PlannerConfig(strategy="auto")
    for F in ([12.0, 0.0, 0.2], [-12.0, 0.0, 0.2]):
        p = reactive_plan(F, q, x, (x, np.zeros(3), np.zeros(3)), GEOM, cfg, K_REACT, (contact, chain))
        expected = clf.classify_contact(contact, F) == "clamping"
        assert p.clamping == expected
        if not expected:
            assert p.target[2] == pytest.approx(x[2])
        else:
            assert p.chain == clf.classify_chain(chain, F, p.d)


def test_hysteresis():
    pl = ReactivePlanner(GEOM, PlannerConfig(strategy="RM"), K_REACT)
    assert pl.update(0.0, [5.0, 0, 0], Q0, X0, REST).mode == Mode.NONE
    first = pl.update(0.001, [12.0, 0, 0], Q0, X0, REST)
    assert first.mode == Mode.RETRACTION and pl.t_start == 0.001
    # another eps_r crossing in a different direction does not re-plan
    again = pl.update(0.002, [0.0, 15.0, 0], Q0, X0, REST)
    assert again is first
    assert np.allclose(pl.desired(0.001), first.trajectory.sample(0.0))
    zg = pl.update(0.003, [0.0, 50.0, 0], Q0, X0, REST)
    assert zg.mode == Mode.ZERO_G
    assert pl.update(0.004, [0.0, 0.0, 0], Q0, X0, REST).mode == Mode.ZERO_G
    assert [m for _, m in pl.events] == [Mode.RETRACTION, Mode.ZERO_G]


@given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3), st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3),
       st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
def test_spatial_opening_residual(base, mags, grad):
    R0, _ = opening_rotation_spatial(np.eye(3), [1, 1, 1], base)
    R_d, res = opening_rotation_spatial(R0, grad, mags)
    assert np.allclose(res, np.sign(grad) * np.abs(mags), atol=1e-12)
    assert np.allclose(R_d @ R_d.T, np.eye(3), atol=1e-12)
    assert np.allclose(tait_bryan_xyz(R0), np.abs(base), atol=1e-12)


def test_spatial_opening_reduces_to_planar(rng):
    for _ in range(50):
        q, x = workspace_state(rng)
        for chain in (1, 2, 3):
            if cg.clamping_angle_gradient_sign(GEOM, q, x, chain) == 0:
                continue
            # q_cl = pi - |q_p| grows along opening_direction
            dqcl = opening_direction(GEOM, q, x, chain)
            _, res = opening_rotation_spatial(np.eye(3), [0.0, 0.0, dqcl], [0.0, 0.0, np.deg2rad(5)])
            assert res[2] == pytest.approx(opening_target(GEOM, q, x, chain, np.deg2rad(5)) - x[2])
