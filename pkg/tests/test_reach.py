import numpy as np
import pytest

from quadverify.errors import ContainmentViolation
from quadverify.reach import (SEPARATION_FLOOR, DiscrepancyModel, HyperRect,
                              Reachtube, check_safety,
                              compute_reachtube_from_simulator,
                              learn_discrepancy, pac_sample_count,
                              sample_initial)

DT = 1e-2
N = 100
TS = np.arange(N + 1) * DT


def linear_sim(lam):
    def sim(x0):
        return (np.atleast_1d(x0)[0] * np.exp(lam * TS))[:, None]
    return sim


# -- PAC sample sizing -------------------------------------------------------

def test_pac_sample_count_reference_values():
    assert pac_sample_count(0.05, 0.01) == 90
    assert pac_sample_count(0.5, 0.5) == 1


def test_pac_sample_count_monotonicity():
    assert pac_sample_count(0.01, 0.01) > pac_sample_count(0.05, 0.01)
    assert pac_sample_count(0.05, 0.001) > pac_sample_count(0.05, 0.01)


def test_pac_sample_count_validates_inputs():
    for eps, dlt in ((0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)):
        with pytest.raises(ValueError):
            pac_sample_count(eps, dlt)


# -- sampling ----------------------------------------------------------------

def test_sample_initial_center_first_and_in_box():
    box = HyperRect(lo=[0.0, -1.0], hi=[2.0, 1.0])
    pts = sample_initial(box, 50, seed=9)
    np.testing.assert_array_equal(pts[0], [1.0, 0.0])
    assert np.all(pts >= box.lo) and np.all(pts <= box.hi)


def test_sample_initial_deterministic_in_seed():
    box = HyperRect(lo=[0.0], hi=[1.0])
    np.testing.assert_array_equal(sample_initial(box, 20, 3),
                                  sample_initial(box, 20, 3))
    assert np.any(sample_initial(box, 20, 3) != sample_initial(box, 20, 4))


def test_sample_initial_requires_positive_count():
    with pytest.raises(ValueError):
        sample_initial(HyperRect(lo=[0.0], hi=[1.0]), 0, 0)


# -- hyperrectangles ---------------------------------------------------------

def test_hyperrect_validation_and_accessors():
    with pytest.raises(ValueError):
        HyperRect(lo=[1.0], hi=[0.0])
    r = HyperRect(lo=[0.0, 0.0], hi=[2.0, 4.0])
    np.testing.assert_array_equal(r.center, [1.0, 2.0])
    np.testing.assert_array_equal(r.half, [1.0, 2.0])
    assert r.contains([1.0, 1.0])
    assert not r.contains([3.0, 1.0])
    assert r.contains([2.1, 1.0], slack=0.2)


def test_hyperrect_from_named():
    r = HyperRect.from_named({"pz": [0.5, 1.5]})
    assert r.lo[2] == 0.5 and r.hi[2] == 1.5
    assert r.lo[0] < -1e5 and r.hi[0] > 1e5


# -- discrepancy learning ----------------------------------------------------

def test_identical_trajectories_give_unit_model():
    traj = np.linspace(0.0, 1.0, N + 1)[:, None] * np.ones((1, 3))
    model = learn_discrepancy(traj, np.array([traj]), 10, DT)
    np.testing.assert_array_equal(model.gamma, 0.0)
    np.testing.assert_array_equal(model.K, 1.0)


@pytest.mark.parametrize("lam", [-1.0, 0.5])
def test_linear_system_rate_recovered(lam):
    sim = linear_sim(lam)
    center = sim(1.5)
    others = np.array([sim(x0) for x0 in (1.0, 1.1, 1.9, 2.0)])
    model = learn_discrepancy(center, others, 10, DT, scales=np.array([0.5]))
    assert np.max(np.abs(model.gamma - lam)) < 0.02 * abs(lam)
    assert np.max(model.K) <= 1.05


def test_propagation_linear_in_initial_radius():
    gamma = np.array([[0.5], [-0.2]])
    K = np.array([[1.1], [1.0]])
    model = DiscrepancyModel(seg_starts=np.array([0, 50, 100]), dt=DT,
                             gamma=gamma, K=K)
    r1 = model.propagate(np.array([0.3]), N + 1)
    r2 = model.propagate(np.array([0.6]), N + 1)
    np.testing.assert_allclose(r2, 2.0 * r1, rtol=1e-12)


def test_learn_discrepancy_requires_samples():
    center = np.zeros((N + 1, 1))
    with pytest.raises(ValueError):
        learn_discrepancy(center, np.zeros((0, N + 1, 1)), 10, DT)


# -- reachtube pipeline ------------------------------------------------------

@pytest.mark.parametrize("lam", [-1.0, 0.5])
def test_tube_contains_analytic_reach_interval(lam):
    tube = compute_reachtube_from_simulator(linear_sim(lam),
                                            HyperRect(lo=[1.0], hi=[2.0]),
                                            DT, seed=3)
    alo = 1.0 * np.exp(lam * TS)
    ahi = 2.0 * np.exp(lam * TS)
    assert np.all(tube.lo[:, 0] <= alo + 1e-12)
    assert np.all(tube.hi[:, 0] >= ahi - 1e-12)
    width = tube.hi[-1, 0] - tube.lo[-1, 0]
    assert width <= 1.15 * (ahi[-1] - alo[-1])


def test_tube_zero_width_initial_set():
    tube = compute_reachtube_from_simulator(linear_sim(-1.0),
                                            HyperRect(lo=[1.5], hi=[1.5]),
                                            DT, seed=0)
    assert np.max(tube.hi - tube.lo) <= 2.0 * SEPARATION_FLOOR * np.exp(1.0)


def test_tube_contains_center_and_witnesses():
    tube = compute_reachtube_from_simulator(linear_sim(0.5),
                                            HyperRect(lo=[1.0], hi=[2.0]),
                                            DT, seed=1)
    assert tube.contains_trajectory(tube.center)
    for w in tube.witnesses:
        assert tube.contains_trajectory(np.asarray(w), slack=1e-9)


def test_sample_count_override():
    tube = compute_reachtube_from_simulator(linear_sim(-1.0),
                                            HyperRect(lo=[1.0], hi=[2.0]),
                                            DT, seed=0, samples=5)
    assert tube.provenance["sample_count"] == 5
    assert len(tube.witnesses) == 5


def test_default_sample_count_is_pac():
    tube = compute_reachtube_from_simulator(linear_sim(-1.0),
                                            HyperRect(lo=[1.0], hi=[2.0]),
                                            DT, seed=0)
    assert tube.provenance["sample_count"] == 90


def test_thread_count_does_not_change_tube():
    box = HyperRect(lo=[1.0], hi=[2.0])
    a = compute_reachtube_from_simulator(linear_sim(0.5), box, DT, seed=2, jobs=1)
    b = compute_reachtube_from_simulator(linear_sim(0.5), box, DT, seed=2, jobs=4)
    np.testing.assert_array_equal(a.lo, b.lo)
    np.testing.assert_array_equal(a.hi, b.hi)


def test_containment_violation_detected():
    # a simulator that is not a pure function of x0 breaks the hard
    # containment post-condition and must be surfaced, not hidden
    calls = {"n": 0}

    def impure(x0):
        calls["n"] += 1
        bump = 100.0 if calls["n"] == 6 else 0.0
        return ((np.atleast_1d(x0)[0] + bump) * np.exp(-TS))[:, None]

    with pytest.raises(ContainmentViolation):
        compute_reachtube_from_simulator(impure, HyperRect(lo=[1.0], hi=[2.0]),
                                         DT, seed=0)


# -- safety verdicts ---------------------------------------------------------

def scalar_tube():
    return compute_reachtube_from_simulator(linear_sim(-1.0),
                                            HyperRect(lo=[1.0], hi=[2.0]),
                                            DT, seed=5)


def test_safety_disjoint_is_safe():
    tube = scalar_tube()
    assert check_safety(tube, HyperRect(lo=[50.0], hi=[60.0])) == "Safe"


def test_safety_witness_hit_is_unsafe():
    tube = scalar_tube()
    # the initial states themselves lie inside this box
    assert check_safety(tube, HyperRect(lo=[1.4], hi=[1.6])) == "Unsafe"


def test_safety_margin_only_is_unknown():
    tube = scalar_tube()
    # hug the over-approximation margin above every simulated trajectory
    top = max(np.asarray(w)[:, 0].max() for w in tube.witnesses)
    hi = float(tube.hi[:, 0].max())
    assert hi > top
    box = HyperRect(lo=[0.5 * (top + hi)], hi=[hi + 1.0])
    assert check_safety(tube, box) == "Unknown"
