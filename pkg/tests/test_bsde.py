"""Backward solver oracles, truncation estimates, comparison/stability/tower."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from l1bsde import (
    Driver,
    TerminalClaim,
    TimeGrid,
    TruncationLevel,
    apriori_estimate_check,
    build_lattice,
    claim_from_spec,
    comparison_check,
    solve_bsde,
    stability_check,
    tower_property_check,
    truncation_scheme,
)
from l1bsde.bsde import (
    constant_driver,
    linear_driver,
    linearization_coefficients,
    monotone_shifted_problem,
    probe_lipschitz,
    zero_driver,
)
from l1bsde.experiments import (
    instance_rng,
    nonneg_bump,
    bumped_driver,
    random_claim,
    random_driver,
    random_lattice,
)


def test_zero_driver_is_martingale_representation():
    lat = build_lattice(TimeGrid(1.0, 5), 1.3)
    sol = solve_bsde(zero_driver(), claim_from_spec(lat, {"kind": "identity"}), lat)
    for t in range(6):
        assert np.array_equal(sol.y.values[t], lat.b[t])
    for z in sol.z.values:
        assert np.allclose(z, 1.0, atol=1e-14)
    assert sol.residual == 0.0


def test_constant_driver_decouples():
    lat = build_lattice(TimeGrid(1.0, 6), 1.0)
    claim = claim_from_spec(lat, {"kind": "square"})
    sol = solve_bsde(constant_driver(0.7), claim, lat)
    expected = float(np.mean(claim.values)) + 0.7 * 1.0
    assert sol.y.values[0][0] == pytest.approx(expected, abs=1e-12)


def test_linear_in_y_driver_matches_scalar_recursion():
    # one-dimensional discounting oracle: y <- E[xi] / (1 - a dt)^N
    lat = build_lattice(TimeGrid(1.0, 8), 1.0)
    claim = claim_from_spec(lat, {"kind": "constant", "value": 2.0})
    a = 0.35
    sol = solve_bsde(linear_driver(a, 0.0), claim, lat)
    oracle = 2.0
    for _ in range(8):
        oracle = oracle / (1.0 - a * lat.grid.dt)
    assert sol.y.values[0][0] == pytest.approx(oracle, rel=1e-13)


def test_terminal_and_residual_invariants_randomized():
    for i in range(20):
        rng = instance_rng(301, i)
        lat = random_lattice(rng, 2, 8)
        driver = random_driver(rng, monotone=bool(rng.random() < 0.5))
        claim = random_claim(rng, lat)
        sol = solve_bsde(driver, claim, lat)
        assert np.array_equal(sol.y.values[-1], claim.values)
        assert sol.residual <= 1e-12
        # gradient is the child-difference quotient by construction
        sq = lat.grid.sqrt_dt
        for t in range(lat.steps):
            nxt = sol.y.values[t + 1]
            quot = (nxt[0::2] - nxt[1::2]) / (2 * lat.sigma[t] * sq)
            assert np.array_equal(sol.z.values[t], quot)


def test_driver_lipschitz_probe():
    rng = instance_rng(302, 0)
    lat = random_lattice(rng, 2, 6)
    for i in range(10):
        driver = random_driver(instance_rng(302, i + 1), monotone=False)
        assert probe_lipschitz(driver, lat, instance_rng(303, i)) <= 1e-12


def test_contraction_guard():
    lat = build_lattice(TimeGrid(10.0, 2), 1.0)  # dt = 5
    with pytest.raises(ValueError):
        solve_bsde(linear_driver(0.3, 0.0), claim_from_spec(lat, {"kind": "identity"}), lat)


def test_monotone_shift_roundtrip():
    for i in range(10):
        rng = instance_rng(304, i)
        lat = random_lattice(rng, 2, 7)
        driver = random_driver(rng, monotone=False, max_ly=0.3)
        claim = random_claim(rng, lat)
        plain = solve_bsde(driver, claim, lat)
        shifted = solve_bsde(driver, claim, lat, monotone_shift=True)
        ydiff = max(float(np.max(np.abs(a - b))) for a, b in zip(plain.y.values, shifted.y.values))
        zdiff = max(float(np.max(np.abs(a - b))) for a, b in zip(plain.z.values, shifted.z.values))
        assert ydiff <= 1e-10 and zdiff <= 1e-10


def test_monotone_shift_makes_driver_nonincreasing():
    lat = build_lattice(TimeGrid(1.0, 8), 1.0)
    driver = linear_driver(0.4, 0.2)
    shifted, _, _ = monotone_shifted_problem(driver, np.zeros(256), lat)
    t = 3
    b, s = lat.b[t], lat.sigma[t]
    y1, y2 = np.full(8, 1.0), np.full(8, 2.0)
    z = np.zeros(8)
    assert np.all(shifted.evaluate(t, b, s, y2, z) <= shifted.evaluate(t, b, s, y1, z) + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(0.1, 100.0))
def test_truncation_map_properties(x, n):
    level = TruncationLevel(n)
    q = float(level.q(x))
    assert abs(q) <= n + 1e-12
    if abs(x) <= n:
        assert q == x
    assert np.sign(q) == np.sign(x) or q == 0.0


def test_truncation_noop_for_bounded_data():
    lat = build_lattice(TimeGrid(1.0, 5), 1.0)
    claim = claim_from_spec(lat, {"kind": "abs"})
    top = float(np.max(claim.values))
    rep = truncation_scheme(linear_driver(-0.2, 0.1), claim, lat, [top + 1, top + 2])
    assert rep.verdict
    for key, d in rep.dist_d.items():
        assert d == 0.0


def test_truncation_pareto_decreasing_and_bounded():
    lat = build_lattice(TimeGrid(1.0, 10), 1.0)
    claim = claim_from_spec(lat, {"kind": "pareto", "alpha": 1.5})
    rep = truncation_scheme(zero_driver(), claim, lat, [2.0, 4.0, 8.0, 16.0])
    assert rep.verdict
    seq = [rep.dist_d[("limit", n)] for n in rep.levels]
    assert all(a > b for a, b in zip(seq, seq[1:]))
    for n in rep.levels:
        assert rep.dist_d[("limit", n)] <= rep.bounds[n] + 1e-10


def test_truncation_frozen_tail_dominates():
    # spike the frozen driver value on the first slice only
    lat = build_lattice(TimeGrid(1.0, 6), 1.0)
    spike = 40.0

    def fn(k, b, s, y, z):
        base = np.where(k == 0, spike, 0.0)
        return base - 0.1 * y

    driver = Driver(fn=fn, lipschitz_y=0.1, lipschitz_z=0.0)
    claim = claim_from_spec(lat, {"kind": "abs"})  # bounded by ~2.4 < all levels
    rep = truncation_scheme(driver, claim, lat, [4.0, 8.0, 16.0])
    assert rep.verdict
    dt = lat.grid.dt
    for n in rep.levels:
        assert rep.bounds[n] == pytest.approx(spike * dt, abs=1e-12)  # tail is all frozen-driver
        assert rep.dist_d[("limit", n)] > 0


def test_comparison_shifted_claim():
    lat = build_lattice(TimeGrid(1.0, 5), 1.0)
    claim = claim_from_spec(lat, {"kind": "identity"})
    lifted = TerminalClaim(values=claim.values + 1.0, lattice=lat)
    rep = comparison_check(zero_driver(), claim, zero_driver(), lifted, lat)
    assert rep.applicable and rep.passed
    s1 = solve_bsde(zero_driver(), claim, lat)
    s2 = solve_bsde(zero_driver(), lifted, lat)
    for a, b in zip(s1.y.values, s2.y.values):
        assert np.allclose(b - a, 1.0, atol=1e-14)


def test_comparison_identical_and_constant_shift():
    lat = build_lattice(TimeGrid(1.0, 4), 1.0)
    claim = claim_from_spec(lat, {"kind": "abs"})
    d = linear_driver(-0.2, 0.1)
    rep = comparison_check(d, claim, d, claim, lat)
    assert rep.applicable and rep.passed and rep.max_violation <= 0
    dplus = bumped_driver(d, lambda b: np.ones_like(b))
    rep2 = comparison_check(d, claim, dplus, claim, lat)
    assert rep2.applicable and rep2.passed
    s1 = solve_bsde(d, claim, lat)
    s2 = solve_bsde(dplus, claim, lat)
    # nonincreasing y-feedback damps the unit lift but never reverses it
    assert 0.5 <= s2.y.values[0][0] - s1.y.values[0][0] <= 1.0


def test_comparison_additive_constant_driver_exact():
    lat = build_lattice(TimeGrid(1.0, 4), 1.0)
    claim = claim_from_spec(lat, {"kind": "abs"})
    s1 = solve_bsde(zero_driver(), claim, lat)
    s2 = solve_bsde(constant_driver(1.0), claim, lat)
    assert s2.y.values[0][0] - s1.y.values[0][0] == pytest.approx(1.0, abs=1e-12)


def test_comparison_inapplicable():
    lat = build_lattice(TimeGrid(1.0, 3), 1.0)
    c1 = claim_from_spec(lat, {"kind": "constant", "value": 1.0})
    c2 = claim_from_spec(lat, {"kind": "constant", "value": 0.0})
    rep = comparison_check(zero_driver(), c1, zero_driver(), c2, lat)
    assert not rep.applicable


def test_comparison_randomized_suite():
    for i in range(60):
        rng = instance_rng(305, i)
        lat = random_lattice(rng, 2, 8)
        d1 = random_driver(rng, monotone=bool(rng.random() < 0.5))
        d2 = bumped_driver(d1, nonneg_bump(rng))
        c1 = random_claim(rng, lat)
        c2 = TerminalClaim(values=c1.values + np.abs(rng.normal(size=lat.n_leaves)), lattice=lat)
        rep = comparison_check(d1, c1, d2, c2, lat, rng)
        assert rep.applicable and rep.passed


def test_stability_identical_pair_and_constant_shift():
    lat = build_lattice(TimeGrid(1.0, 5), 1.0)
    claim = claim_from_spec(lat, {"kind": "abs"})
    d = linear_driver(0.0, 0.3)  # y-independent
    rep = stability_check(d, claim, d, claim, 0.5, lat)
    assert rep.d_delta == 0.0 and rep.passed
    eps = 0.37
    lifted = TerminalClaim(values=claim.values + eps, lattice=lat)
    rep2 = stability_check(d, claim, d, lifted, 0.5, lat)
    assert rep2.d_delta == pytest.approx(eps, abs=1e-13)
    assert rep2.d_bound == pytest.approx(eps, abs=1e-13)
    assert rep2.passed


def test_stability_randomized_monotone_suite():
    for i in range(40):
        rng = instance_rng(306, i)
        lat = random_lattice(rng, 2, 8)
        d1 = random_driver(rng, monotone=True)
        d2 = random_driver(rng, monotone=True)
        c1 = random_claim(rng, lat)
        c2 = TerminalClaim(values=c1.values + rng.normal(size=lat.n_leaves), lattice=lat)
        rep = stability_check(d1, c1, d2, c2, 0.5, lat)
        assert rep.passed, f"instance {i}: delta {rep.d_delta} > bound {rep.d_bound}"
        assert np.isfinite(rep.beta_lhs) and np.isfinite(rep.beta_rhs)


def test_apriori_zero_and_constant_driver():
    lat = build_lattice(TimeGrid(1.0, 6), 1.0)
    claim = claim_from_spec(lat, {"kind": "identity"})
    rep = apriori_estimate_check(solve_bsde(zero_driver(), claim, lat), 0.5, L=0.4)
    assert rep.passed
    rep2 = apriori_estimate_check(solve_bsde(constant_driver(0.5), claim, lat), 0.5, L=0.4)
    assert rep2.passed


def test_apriori_randomized_monotone_suite():
    for i in range(60):
        rng = instance_rng(307, i)
        lat = random_lattice(rng, 2, 8)
        driver = random_driver(rng, monotone=True)
        claim = random_claim(rng, lat)
        rep = apriori_estimate_check(solve_bsde(driver, claim, lat), 0.5)
        assert rep.passed


def test_tower_property():
    rng = instance_rng(308, 0)
    lat = random_lattice(rng, 4, 8)
    driver = random_driver(rng, monotone=False)
    claim = random_claim(rng, lat)
    for k in (0, lat.steps // 2, lat.steps):
        rep = tower_property_check(driver, claim, lat, k)
        assert rep.passed and rep.max_abs_diff <= 1e-12
    zrep = tower_property_check(zero_driver(), claim, lat, lat.steps // 2)
    assert zrep.max_abs_diff == 0.0


def test_linearization_reconstructs_differences():
    rng = instance_rng(309, 0)
    lat = random_lattice(rng, 3, 5)
    driver = random_driver(rng, monotone=False)
    t = 1
    b, s = lat.b[t], lat.sigma[t]
    for _ in range(20):
        y1, y2 = rng.normal(size=(2, 2**t)) * 2
        z1, z2 = rng.normal(size=(2, 2**t)) * 2
        a, bc = linearization_coefficients(driver, t, b, s, y1, z1, y2, z2)
        assert np.all(np.abs(a) <= driver.lipschitz_y + 1e-12)
        assert np.all(np.abs(bc) <= driver.lipschitz_z + 1e-12)
        recon = a * (y1 - y2) + bc * s * (z1 - z2)
        truth = driver.evaluate(t, b, s, y1, z1) - driver.evaluate(t, b, s, y2, z2)
        assert np.allclose(recon, truth, atol=1e-12)
    # 0/0 guard
    a, bc = linearization_coefficients(driver, t, b, s, np.zeros(2**t), np.zeros(2**t), np.zeros(2**t), np.zeros(2**t))
    assert np.all(a == 0.0) and np.all(bc == 0.0)
