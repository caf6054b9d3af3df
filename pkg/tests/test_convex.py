import math

import numpy as np
import pytest

from netsynth.convex import (
    Ball,
    FeasibilityOutcome,
    HalfPlane,
    PairBall,
    feasibility,
    project,
    violation,
)


def test_project_point_inside_ball_unchanged():
    pts = np.array([[0.2, 0.3]])
    out = project(pts, Ball(0, 0.0, 0.0, 1.0))
    assert np.allclose(out, pts)


def test_project_onto_ball_boundary():
    pts = np.array([[3.0, 0.0]])
    out = project(pts, Ball(0, 0.0, 0.0, 1.0))
    assert np.allclose(out, [[1.0, 0.0]])


def test_project_pairball_symmetric_contraction():
    pts = np.array([[0.0, 0.0], [4.0, 0.0]])
    out = project(pts, PairBall(0, 1, 2.0))
    assert np.allclose(out, [[1.0, 0.0], [3.0, 0.0]])


def test_project_pairball_matches_numeric_minimizer():
    # nearest pair satisfying |a-b|<=r minimizes |a-a0|^2+|b-b0|^2
    rng = np.random.default_rng(5)
    for _ in range(20):
        pts = rng.uniform(-3, 3, size=(2, 2))
        r = rng.uniform(0.3, 2.0)
        out = project(pts, PairBall(0, 1, r))
        d = np.linalg.norm(out[0] - out[1])
        assert d <= r + 1e-9
        # numeric check: perturbations satisfying the constraint don't improve
        base = ((out - pts) ** 2).sum()
        for _ in range(60):
            trial = out + rng.normal(scale=1e-3, size=(2, 2))
            if np.linalg.norm(trial[0] - trial[1]) <= r:
                assert ((trial - pts) ** 2).sum() >= base - 1e-9


def test_project_halfplane():
    pts = np.array([[2.0, 2.0]])
    out = project(pts, HalfPlane(0, 1.0, 0.0, 1.0))  # x <= 1
    assert np.allclose(out, [[1.0, 2.0]])
    assert violation(HalfPlane(0, 1.0, 0.0, 1.0), out) <= 1e-12


def test_halfplane_normalization_scales_bound():
    # 2x <= 4 is the same set as x <= 2
    h = HalfPlane(0, 2.0, 0.0, 4.0)
    assert violation(h, np.array([[2.0, 0.0]])) == pytest.approx(0.0)
    assert violation(h, np.array([[3.0, 0.0]])) == pytest.approx(1.0)


def test_feasibility_disjoint_ball_halfplane_infeasible():
    cons = [Ball(0, 0.0, 0.0, 1.0), HalfPlane(0, -1.0, 0.0, -2.0)]  # x >= 2
    out = feasibility(cons, np.zeros((1, 2)), tol=1e-8)
    assert out.infeasible
    assert set(map(id, out.core)) <= set(map(id, cons))
    assert len(out.core) == 2


def test_feasibility_overlapping_balls_witness_in_lens():
    cons = [Ball(0, 0.0, 0.0, 1.0), Ball(0, 1.5, 0.0, 1.0)]
    out = feasibility(cons, np.array([[5.0, 5.0]]), tol=1e-9)
    assert out.feasible
    for c in cons:
        assert violation(c, out.witness) < 1e-9


def test_feasible_witness_satisfies_all_constraints():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = 1
        cons = []
        # random conjunction around a guaranteed common point
        anchor = rng.uniform(0.2, 0.8, size=2)
        for _ in range(rng.integers(2, 7)):
            if rng.uniform() < 0.5:
                d = rng.normal(size=2)
                d /= np.linalg.norm(d)
                b = d @ anchor + rng.uniform(0.05, 1.0)
                cons.append(HalfPlane(0, d[0], d[1], b))
            else:
                c = anchor + rng.normal(scale=0.3, size=2)
                r = np.linalg.norm(anchor - c) + rng.uniform(0.05, 1.0)
                cons.append(Ball(0, c[0], c[1], r))
        out = feasibility(cons, np.array([[5.0, -3.0]]), tol=1e-9)
        assert out.feasible
        for c in cons:
            assert violation(c, out.witness) < 1e-9


def test_verdicts_match_grid_search(rng):
    """Random small conjunctions in the unit box vs dense grid search."""
    res = 1e-3
    xs = np.linspace(0, 1, int(1 / res) + 1)
    gx, gy = np.meshgrid(xs, xs)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    for trial in range(40):
        cons = [
            HalfPlane(0, 1.0, 0.0, 1.0),
            HalfPlane(0, -1.0, 0.0, 0.0),
            HalfPlane(0, 0.0, 1.0, 1.0),
            HalfPlane(0, 0.0, -1.0, 0.0),
        ]
        sat = np.ones(len(grid), dtype=bool)
        for _ in range(int(rng.integers(1, 6))):
            if rng.uniform() < 0.5:
                d = rng.normal(size=2)
                d /= np.linalg.norm(d)
                b = float(rng.uniform(-0.2, 1.2))
                cons.append(HalfPlane(0, d[0], d[1], b))
                sat &= grid @ d <= b + 1e-12
            else:
                c = rng.uniform(-0.5, 1.5, size=2)
                r = float(rng.uniform(0.2, 1.2))
                cons.append(Ball(0, c[0], c[1], r))
                sat &= ((grid - c) ** 2).sum(axis=1) <= r * r + 1e-12
        out = feasibility(cons, np.array([[0.5, 0.5]]), tol=1e-7)
        if sat.any():
            # grid point strictly inside implies genuinely feasible
            assert out.feasible or out.kind == "unknown", trial
        else:
            assert not out.feasible, trial


def test_infeasible_core_is_stable():
    cons = [
        Ball(0, 0.0, 0.0, 1.0),
        Ball(0, 5.0, 0.0, 1.0),
        HalfPlane(0, 0.0, 1.0, 100.0),  # irrelevant
        Ball(0, 2.5, 4.0, 10.0),        # irrelevant
    ]
    out = feasibility(cons, np.zeros((1, 2)), tol=1e-8)
    assert out.infeasible
    rerun = feasibility(out.core, np.zeros((1, 2)), tol=1e-8)
    assert rerun.infeasible
    # the two disjoint balls are the conflict; irrelevant constraints dropped
    assert len(out.core) == 2
    assert all(isinstance(c, Ball) for c in out.core)


def test_pocs_converges_on_nonempty_intersections(rng):
    for _ in range(30):
        common = rng.uniform(-1, 1, size=2)
        cons = []
        for _ in range(int(rng.integers(2, 6))):
            c = common + rng.normal(scale=0.5, size=2)
            cons.append(Ball(0, c[0], c[1], float(np.linalg.norm(common - c)) + 0.2))
        out = feasibility(cons, np.array([[8.0, 8.0]]), tol=1e-8, max_iters=10**5)
        assert out.feasible


def test_feasibility_rejects_empty_set():
    with pytest.raises(ValueError):
        feasibility([], np.zeros((1, 2)))


def test_pairball_chain_feasible():
    cons = [
        Ball(0, 0.0, 0.0, 0.5),
        Ball(2, 10.0, 0.0, 0.5),
        PairBall(0, 1, 6.0),
        PairBall(1, 2, 6.0),
    ]
    out = feasibility(cons, np.array([[0.0, 0.0], [5.0, 3.0], [10.0, 0.0]]), tol=1e-8)
    assert out.feasible


def test_pairball_chain_infeasible():
    cons = [
        Ball(0, 0.0, 0.0, 0.1),
        Ball(1, 10.0, 0.0, 0.1),
        PairBall(0, 1, 2.0),
    ]
    out = feasibility(cons, np.array([[0.0, 0.0], [10.0, 0.0]]), tol=1e-8)
    assert out.infeasible
