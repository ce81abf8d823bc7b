"""Tree construction, tilted measures, claims."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from l1bsde import (
    CapExceededError,
    DriftControl,
    TimeGrid,
    build_lattice,
    claim_from_spec,
    constant_control,
    paste_controls,
    tilt,
)
from l1bsde.lattice import pareto_from_rank


def test_grid_dt_times_steps_is_horizon():
    for horizon, steps in [(1.0, 1), (1.0, 7), (2.5, 13), (0.3, 22)]:
        grid = TimeGrid(horizon, steps)
        assert grid.dt * steps == pytest.approx(horizon, abs=1e-15)


def test_grid_rejects_degenerate():
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(-1.0, 4)


def test_single_step_tree():
    lat = build_lattice(TimeGrid(1.0, 1), 1.0)
    assert lat.n_nodes() == 3
    assert sorted(lat.leaf_b()) == [-1.0, 1.0]


def test_two_step_tree_leaf_values():
    lat = build_lattice(TimeGrid(1.0, 2), 1.0)
    assert lat.n_nodes() == 7
    r = np.sqrt(0.5)
    expected = sorted([r + r, r - r, -r + r, -r - r])
    assert np.allclose(sorted(lat.leaf_b()), expected)


def test_three_step_tree_max_leaf():
    lat = build_lattice(TimeGrid(1.0, 3), 2.0)
    assert np.max(np.abs(lat.leaf_b())) == pytest.approx(2 * 3 * np.sqrt(1 / 3))


def test_increments_match_sigma(rng=np.random.default_rng(0)):
    lat = build_lattice(TimeGrid(1.3, 5), lambda t, b: 0.5 + 0.4 * (b > 0))
    sq = lat.grid.sqrt_dt
    for t in range(lat.steps):
        parent = lat.b[t]
        child = lat.b[t + 1]
        assert np.allclose(child[0::2] - parent, lat.sigma[t] * sq)
        assert np.allclose(child[1::2] - parent, -lat.sigma[t] * sq)
        assert np.all(lat.sigma[t] > 0)
    assert lat.b[0][0] == 0.0


def test_sigma_floor_enforced():
    with pytest.raises(ValueError):
        build_lattice(TimeGrid(1.0, 2), 0.0)
    with pytest.raises(ValueError):
        build_lattice(TimeGrid(1.0, 2), -1.0)


def test_depth_cap(monkeypatch):
    with pytest.raises(CapExceededError):
        build_lattice(TimeGrid(1.0, 23), 1.0)
    monkeypatch.setenv("L1BSDE_DEPTH_CAP", "4")
    with pytest.raises(CapExceededError):
        build_lattice(TimeGrid(1.0, 5), 1.0)
    build_lattice(TimeGrid(1.0, 4), 1.0)


def test_control_bound_enforced():
    lat = build_lattice(TimeGrid(1.0, 2), 1.0)
    with pytest.raises(ValueError):
        DriftControl(lam=[np.array([2.0]), np.zeros(2)], bound=1.0)
    with pytest.raises(ValueError):
        constant_control(lat, 0.5, bound=-1.0)


def test_tilt_zero_kernel_is_uniform():
    lat = build_lattice(TimeGrid(1.0, 3), 1.0)
    measure = tilt(lat, constant_control(lat, 0.0))
    assert np.allclose(measure.leaf_density(), 1.0)
    for p in measure.up_probs:
        assert np.allclose(p, 0.5)


def test_tilt_single_step_hand_values():
    # dt = 1, lam = 0.5: up probability 0.75 and mean noise 0.5
    lat = build_lattice(TimeGrid(1.0, 1), 1.0)
    measure = tilt(lat, constant_control(lat, 0.5))
    assert measure.up_probs[0][0] == pytest.approx(0.75)
    assert measure.expectation(lat.w[-1]) == pytest.approx(0.5)


@pytest.mark.parametrize("steps", [1, 2, 5, 9])
@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_tilt_constant_kernel_telescopes(steps, sign):
    # per-step mean lam*dt sums to lam*T for the driving noise
    lat = build_lattice(TimeGrid(1.7, steps), 1.3)
    L = 0.4
    measure = tilt(lat, constant_control(lat, sign * L))
    assert measure.expectation(lat.w[-1]) == pytest.approx(sign * L * 1.7, abs=1e-12)


def test_tilt_probabilities_and_density_mass():
    rng = np.random.default_rng(7)
    lat = build_lattice(TimeGrid(1.0, 6), 1.0)
    lam = [rng.uniform(-0.9, 0.9, size=2**t) for t in range(6)]
    measure = tilt(lat, DriftControl(lam=lam, bound=0.9))
    for p in measure.up_probs:
        assert np.all((p > 0) & (p < 1))
    probs = measure.leaf_probabilities()
    assert np.all(probs > 0)
    assert abs(probs.sum() - 1.0) <= 1e-14
    assert abs(measure.expectation(np.ones(lat.n_leaves)) - 1.0) <= 1e-14


def test_tilt_infeasible_kernel():
    lat = build_lattice(TimeGrid(4.0, 2), 1.0)  # sqrt(dt) = sqrt(2)
    with pytest.raises(ValueError):
        tilt(lat, constant_control(lat, 0.9))


def test_pasting_concatenation_stability():
    # composing densities at step k equals the pasted kernel's density, exactly
    rng = np.random.default_rng(3)
    lat = build_lattice(TimeGrid(1.0, 5), 1.0)
    c1 = DriftControl(lam=[rng.uniform(-0.5, 0.5, 2**t) for t in range(5)], bound=0.5)
    c2 = DriftControl(lam=[rng.uniform(-0.5, 0.5, 2**t) for t in range(5)], bound=0.5)
    k = 2
    pasted = tilt(lat, paste_controls(c1, c2, k)).leaf_density()
    # independent product: head factors from c1, tail factors from c2
    sq = lat.grid.sqrt_dt
    d = np.ones(1)
    for t in range(5):
        lam = (c1.lam if t < k else c2.lam)[t] * sq
        nxt = np.empty(2 ** (t + 1))
        nxt[0::2] = d * (1.0 + lam)
        nxt[1::2] = d * (1.0 - lam)
        d = nxt
    assert np.array_equal(pasted, d)


def test_claim_identity_and_constant():
    lat = build_lattice(TimeGrid(1.0, 3), 1.0)
    assert np.array_equal(claim_from_spec(lat, {"kind": "identity"}).values, lat.leaf_b())
    assert np.all(claim_from_spec(lat, {"kind": "constant", "value": 3.5}).values == 3.5)
    with pytest.raises(ValueError):
        claim_from_spec(lat, {"kind": "nope"})


def test_claim_pathmax_matches_manual_enumeration():
    lat = build_lattice(TimeGrid(1.0, 3), 1.0)
    got = claim_from_spec(lat, {"kind": "pathabsmax"}).values
    for leaf in range(8):
        path = [0.0]
        node = 0
        for t in range(3):
            bit = (leaf >> (2 - t)) & 1
            node = 2 * node + bit
            path.append(lat.b[t + 1][node])
        assert got[leaf] == pytest.approx(max(abs(x) for x in path))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=2, max_size=64),
    st.floats(1.1, 1.9),
    st.floats(0.1, 10.0),
)
def test_pareto_rank_transform_properties(raw, alpha, scale):
    vals = np.abs(np.asarray(raw))
    masses = np.full(len(vals), 1.0 / len(vals))
    out = pareto_from_rank(vals, masses, alpha, scale)
    assert np.all(np.isfinite(out))
    assert np.all(out >= scale - 1e-12)
    # monotone in the input magnitude, ties mapped to equal outputs
    order = np.argsort(vals)
    sorted_out = out[order]
    assert np.all(np.diff(sorted_out) >= -1e-12)
    for i in range(len(vals)):
        for j in range(len(vals)):
            if vals[i] == vals[j]:
                assert out[i] == out[j]


def test_pareto_claim_heavy_tail_shape():
    lat = build_lattice(TimeGrid(1.0, 10), 1.0)
    claim = claim_from_spec(lat, {"kind": "pareto", "alpha": 1.5, "scale": 1.0})
    assert np.max(claim.values) > 50  # top rank blows up like (leaf mass)^(-2/3)
    assert np.min(claim.values) >= 1.0
