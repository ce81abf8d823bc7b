"""Named experiment suites: seeded instance generation, measured rows, bounds.

Seeds drive instance generation only; every solver downstream is
deterministic, so a (config, seed) pair pins the emitted rows exactly.  Each
suite returns a list of zero-argument instance callables so the runner can
execute them sequentially or concurrently; rows are sorted before writing,
which makes the output independent of scheduling.

Suites asserting the parameter-free stopping-norm bounds draw drivers that are
nonincreasing in y (the normalization under which those bounds are exact);
comparison suites use general-sign Lipschitz drivers.
"""

from __future__ import annotations

import numpy as np

from . import bsde, nonlinexp, norms, rbsde, twobsde
from .config import ExperimentConfig, ResultRow
from .lattice import (
    PathLattice,
    TerminalClaim,
    TimeGrid,
    build_lattice,
    claim_from_spec,
)

BETAS = (0.25, 0.5, 0.75)


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _count(config: ExperimentConfig, suite: str, default: int) -> int:
    specific = config.get("params", f"count_{suite.replace('-', '_')}", None, int)
    return specific if specific is not None else config.get("params", "count", default, int)


# ---------------------------------------------------------------------------
# random instance building blocks


def random_grid(rng, n_lo: int, n_hi: int) -> TimeGrid:
    return TimeGrid(horizon=float(rng.uniform(0.5, 2.0)), steps=int(rng.integers(n_lo, n_hi + 1)))


def random_lattice(rng, n_lo: int = 2, n_hi: int = 8) -> PathLattice:
    grid = random_grid(rng, n_lo, n_hi)
    if rng.random() < 0.5:
        return build_lattice(grid, float(rng.uniform(0.5, 1.5)))
    lo, hi = sorted(rng.uniform(0.4, 1.6, size=2))
    return build_lattice(grid, lambda t, b: lo + (hi - lo) * (b > 0.0))


def feasible_bound(rng, lattice: PathLattice, hi: float = 1.5) -> float:
    cap = 0.8 / lattice.grid.sqrt_dt
    return float(rng.uniform(0.1, min(hi, cap)))


def random_claim(rng, lattice: PathLattice) -> TerminalClaim:
    kind = rng.choice(["identity", "abs", "square", "call", "put", "pathabsmax", "gaussian"])
    if kind == "gaussian":
        return TerminalClaim(values=rng.normal(size=lattice.n_leaves) * 2.0, lattice=lattice)
    spec = {"kind": str(kind)}
    if kind in ("call", "put"):
        spec["strike"] = float(rng.normal() * 0.5)
    return claim_from_spec(lattice, spec)


def _g0_fn(rng):
    amp = float(rng.uniform(-1.0, 1.0))
    phase = float(rng.uniform(0.0, 6.28))
    form = rng.choice(["cos", "linear", "zero"])
    if form == "cos":
        return lambda k, b: amp * np.cos(b + phase)
    if form == "linear":
        return lambda k, b: amp * (b + phase / 6.0)
    return lambda k, b: np.zeros_like(b)


def random_driver(rng, monotone: bool, max_ly: float = 0.4, max_lz: float = 0.4) -> bsde.Driver:
    """Random Lipschitz generator; monotone=True forces df/dy <= 0."""
    a = -float(rng.uniform(0.0, max_ly)) if monotone else float(rng.uniform(-max_ly, max_ly))
    c = float(rng.uniform(-max_lz, max_lz))
    g0 = _g0_fn(rng)
    form = rng.choice(["linear", "relu_y", "abs_z"])
    if form == "linear":
        fn = lambda k, b, s, y, z: g0(k, b) + a * y + c * (s * z)
    elif form == "relu_y":
        fn = lambda k, b, s, y, z: g0(k, b) + a * np.maximum(y, 0.0) + c * (s * z)
    else:
        fn = lambda k, b, s, y, z: g0(k, b) + a * y + c * np.abs(s * z)
    return bsde.Driver(fn=fn, lipschitz_y=abs(a), lipschitz_z=abs(c), label=f"rand-{form}")


def nonneg_bump(rng):
    amp = float(rng.uniform(0.0, 0.8))
    phase = float(rng.uniform(0.0, 6.28))
    return lambda b: amp * (1.0 + np.cos(b + phase)) / 2.0


def bumped_driver(driver: bsde.Driver, bump) -> bsde.Driver:
    fn = lambda k, b, s, y, z: driver.fn(k, b, s, y, z) + bump(b)
    return bsde.Driver(fn=fn, lipschitz_y=driver.lipschitz_y, lipschitz_z=driver.lipschitz_z,
                       label=driver.label + "+bump")


def random_submartingale(rng, lattice: PathLattice, L: float) -> norms.NodeProcess:
    """Backward construction: tilted conditional mean minus a nonnegative drain, floored at 0."""
    sq = lattice.grid.sqrt_dt
    vals = [None] * (lattice.steps + 1)
    vals[lattice.steps] = np.abs(rng.normal(size=lattice.n_leaves)) * float(rng.uniform(0.5, 3.0))
    for t in range(lattice.steps - 1, -1, -1):
        lam = rng.uniform(-L, L, size=2**t)
        nxt = vals[t + 1]
        up, dn = nxt[0::2], nxt[1::2]
        mean = 0.5 * (up + dn) + lam * sq * 0.5 * (up - dn)
        drain = rng.uniform(0.0, 0.3, size=2**t) * (rng.random() < 0.7)
        vals[t] = np.maximum(mean - drain, 0.0)
    return norms.NodeProcess(values=vals, kind="adapted")


# ---------------------------------------------------------------------------
# suites


def _suite_oracle(config: ExperimentConfig):
    count = _count(config, "oracle-equivalence", 200)
    seed = config.seed

    def make(i):
        def run():
            rng = instance_rng(seed, i)
            lattice = random_lattice(rng, 1, 3)
            L = feasible_bound(rng, lattice)
            claim = random_claim(rng, lattice)
            dp = nonlinexp.sup_expectation(claim, L, lattice)
            bf = nonlinexp.brute_force_sup_expectation(claim, L, lattice)
            err = abs(dp.value - bf.value)
            redo = abs(nonlinexp.reevaluate(dp, claim, lattice) - dp.value)
            return [
                ResultRow("oracle-equivalence", f"i{i:04d}", f"N={lattice.steps}",
                          "dp_vs_bruteforce_abs_error", err, 1e-12),
                ResultRow("oracle-equivalence", f"i{i:04d}", f"N={lattice.steps}",
                          "optimal_control_reeval_abs_error", redo, 1e-12),
            ]

        return run

    return [make(i) for i in range(count)]


def _suite_doob(config: ExperimentConfig):
    count = _count(config, "doob", 200)
    betas = config.get_floats("params", "betas", BETAS)
    seed = config.seed

    def make(i):
        def run():
            rng = instance_rng(seed, i)
            lattice = random_lattice(rng, 2, 8)
            L = feasible_bound(rng, lattice)
            m = random_submartingale(rng, lattice, L)
            rows = []
            for beta in betas:
                rep = norms.doob_inequality_check(m, beta, L, lattice)
                if not rep.applicable:
                    rows.append(ResultRow("doob", f"i{i:04d}", f"beta={beta}",
                                          "doob_applicable", 0.0, 0.0, passed=False))
                    continue
                rows.append(ResultRow("doob", f"i{i:04d}", f"beta={beta}",
                                      "s_beta_norm", rep.s_beta, rep.bound,
                                      passed=rep.slack >= 0.0))
            return rows

        return run

    return [make(i) for i in range(count)]


def _suite_apriori(config: ExperimentConfig):
    count = _count(config, "apriori", 500)
    beta = config.get("params", "beta", 0.5, float)
    seed = config.seed

    def make(i):
        def run():
            rng = instance_rng(seed, i)
            lattice = random_lattice(rng, 2, 10)
            driver = random_driver(rng, monotone=True)
            claim = random_claim(rng, lattice)
            sol = bsde.solve_bsde(driver, claim, lattice)
            rep = bsde.apriori_estimate_check(sol, beta)
            return [
                ResultRow("apriori", f"i{i:04d}", f"N={lattice.steps}",
                          "y_d_norm", rep.d_norm_y, rep.bound + 1e-10),
                ResultRow("apriori", f"i{i:04d}", f"N={lattice.steps}",
                          "residual", sol.residual, 1e-12),
            ]

        return run

    return [make(i) for i in range(count)]


def _suite_comparison(config: ExperimentConfig):
    count = _count(config, "comparison", 1000)
    seed = config.seed
    n_bsde = int(count * 0.4)
    n_rbsde = int(count * 0.4)
    n_two = count - n_bsde - n_rbsde

    def make_bsde(i):
        def run():
            rng = instance_rng(seed, i)
            lattice = random_lattice(rng, 2, 8)
            d1 = random_driver(rng, monotone=bool(rng.random() < 0.5))
            d2 = bumped_driver(d1, nonneg_bump(rng))
            c1 = random_claim(rng, lattice)
            c2 = TerminalClaim(values=c1.values + np.abs(rng.normal(size=lattice.n_leaves)), lattice=lattice)
            rep = bsde.comparison_check(d1, c1, d2, c2, lattice, rng)
            val = rep.max_violation if rep.applicable else np.inf
            return [ResultRow("comparison", f"b{i:04d}", f"N={lattice.steps}",
                              "bsde_max_order_violation", val, 1e-12)]

        return run

    def make_rbsde(i):
        def run():
            rng = instance_rng(seed, 10_000 + i)
            lattice = random_lattice(rng, 2, 7)
            d1 = random_driver(rng, monotone=bool(rng.random() < 0.5))
            d2 = bumped_driver(d1, nonneg_bump(rng))
            c1 = random_claim(rng, lattice)
            c2 = TerminalClaim(values=c1.values + np.abs(rng.normal(size=lattice.n_leaves)), lattice=lattice)
            o1 = rbsde.obstacle_from_fn(lambda t, b: b - float(rng.uniform(0.5, 2.0)), lattice)
            lift = nonneg_bump(rng)
            o2 = rbsde.ObstaclePath(values=[v + lift(lattice.b[t]) for t, v in enumerate(o1.values)])
            rep = rbsde.rbsde_comparison_check(d1, c1, o1, d2, c2, o2, lattice, rng)
            val = rep.max_violation if rep.applicable else np.inf
            return [ResultRow("comparison", f"r{i:04d}", f"N={lattice.steps}",
                              "rbsde_max_order_violation", val, 1e-12)]

        return run

    def make_two(i):
        def run():
            rng = instance_rng(seed, 20_000 + i)
            grid = random_grid(rng, 2, 5)
            levels = tuple(sorted(rng.uniform(0.4, 1.5, size=2)))
            unc = twobsde.UncertaintySet(levels=levels)
            d1 = random_driver(rng, monotone=bool(rng.random() < 0.5), max_ly=0.3, max_lz=0.3)
            d2 = bumped_driver(d1, nonneg_bump(rng))
            shift = float(rng.uniform(0.0, 1.0))
            spec1 = {"kind": "square"}
            spec2 = {"kind": "terminal", "fn": lambda bT: bT**2 + shift}
            rep = twobsde.comparison_2bsde(d1, spec1, d2, spec2, unc, grid, rng)
            val = rep.max_violation if rep.applicable else np.inf
            return [ResultRow("comparison", f"t{i:04d}", f"N={grid.steps}",
                              "twobsde_max_order_violation", val, 1e-12)]

        return run

    return (
        [make_bsde(i) for i in range(n_bsde)]
        + [make_rbsde(i) for i in range(n_rbsde)]
        + [make_two(i) for i in range(n_two)]
    )


def _config_driver(config: ExperimentConfig) -> bsde.Driver:
    sec = config.section("driver")
    kind = sec.get("kind", "linear")
    if kind == "zero":
        return bsde.zero_driver()
    if kind == "constant":
        return bsde.constant_driver(float(sec.get("value", "0.5")))
    if kind == "linear":
        a = float(sec.get("a", "-0.2"))
        c = float(sec.get("c", "0.3"))
        g0_kind = sec.get("g0", "cos")
        g0 = {"cos": lambda k, b: np.cos(b), "zero": None, "sin": lambda k, b: np.sin(b)}[g0_kind]
        return bsde.linear_driver(a, c, g0)
    raise ValueError(f"unknown driver kind {kind!r}")


def _config_lattice(config: ExperimentConfig, default_n: int = 16) -> PathLattice:
    grid = TimeGrid(
        horizon=config.get("grid", "t", 1.0, float),
        steps=config.get("grid", "n", default_n, int),
    )
    sec = config.section("regime")
    kind = sec.get("kind", "constant")
    if kind == "constant":
        return build_lattice(grid, float(sec.get("sigma", "1.0")))
    if kind == "twolevel":
        lo, hi = float(sec.get("lo", "0.8")), float(sec.get("hi", "1.2"))
        return build_lattice(grid, lambda t, b: lo + (hi - lo) * (b > 0.0))
    raise ValueError(f"unknown regime kind {kind!r}")


def _config_claim(config: ExperimentConfig, lattice: PathLattice) -> TerminalClaim:
    sec = config.section("claim")
    spec = {"kind": sec.get("kind", "pareto")}
    for key in ("alpha", "scale", "strike", "value"):
        if key in sec:
            spec[key] = float(sec[key])
    return claim_from_spec(lattice, spec)


def _suite_truncation(config: ExperimentConfig):
    def run():
        lattice = _config_lattice(config, default_n=16)
        driver = _config_driver(config)
        claim = _config_claim(config, lattice)
        levels = config.get_floats("params", "levels", (2.0, 4.0, 8.0, 16.0, 32.0))
        betas = config.get_floats("params", "betas", BETAS)
        rows = []
        dist_seq = []
        for beta in betas:
            rep = bsde.truncation_scheme(driver, claim, lattice, levels, beta=beta)
            for n in levels:
                dd = rep.dist_d[("limit", n)]
                ds = rep.dist_s[("limit", n)]
                bound = rep.bounds[n]
                rows.append(ResultRow("truncation", "i0000", f"beta={beta};n={n:g}",
                                      "distance_d_to_limit", dd, bound + 1e-10))
                rows.append(ResultRow("truncation", "i0000", f"beta={beta};n={n:g}",
                                      "distance_s_to_limit", ds,
                                      bound**beta / (1.0 - beta) + 1e-10))
            for key, dd in rep.dist_d.items():
                if key[0] == "limit":
                    continue
                n, m = key
                rows.append(ResultRow("truncation", "i0000", f"beta={beta};n={n:g};m={m:g}",
                                      "distance_d_pair", dd, rep.bounds[m] + 1e-10))
            if beta == betas[0]:
                # strict decrease only holds across levels the data actually exceeds
                biting = [n for n in levels if n < float(np.max(np.abs(claim.values)))]
                dist_seq = [rep.dist_d[("limit", n)] for n in biting]
        margin = min(a - b for a, b in zip(dist_seq, dist_seq[1:])) if len(dist_seq) > 1 else 1.0
        rows.append(ResultRow("truncation", "i0000", "all", "strict_decrease_margin",
                              -margin, -1e-15))
        return rows

    return [run]


def _suite_rbsde(config: ExperimentConfig):
    count = _count(config, "rbsde-exactness", 30)
    seed = config.seed

    def make(i):
        def run():
            rng = instance_rng(seed, i)
            lattice = random_lattice(rng, 2, 3 if i % 2 == 0 else 8)
            driver = random_driver(rng, monotone=True)
            claim = random_claim(rng, lattice)
            obstacle = rbsde.obstacle_from_fn(lambda t, b: b - float(rng.uniform(0.2, 1.5)), lattice)
            sol = rbsde.solve_rbsde(driver, claim, obstacle, lattice)
            rows = [
                ResultRow("rbsde-exactness", f"i{i:04d}", f"N={lattice.steps}",
                          "skorokhod_defect", sol.skorokhod_defect, 1e-12),
                ResultRow("rbsde-exactness", f"i{i:04d}", f"N={lattice.steps}",
                          "equation_residual", sol.residual, 1e-12),
            ]
            free_sol = rbsde.solve_rbsde(bsde.zero_driver(), claim, obstacle, lattice)
            snell = rbsde.snell_oracle(claim, obstacle, lattice, method="dp")
            diff = max(float(np.max(np.abs(a - b))) for a, b in zip(free_sol.y.values, snell.slices))
            rows.append(ResultRow("rbsde-exactness", f"i{i:04d}", f"N={lattice.steps}",
                                  "driverfree_solver_vs_snell_dp", diff, 1e-12))
            if lattice.steps <= 3:
                exh = rbsde.snell_oracle(claim, obstacle, lattice, method="exhaustive")
                rows.append(ResultRow("rbsde-exactness", f"i{i:04d}", f"N={lattice.steps}",
                                      "snell_dp_vs_exhaustive", abs(snell.value - exh.value), 1e-12))
            return rows

        return run

    def american(_):
        def run():
            grid = TimeGrid(horizon=1.0, steps=3)
            lattice = build_lattice(grid, 0.4)
            strike = 1.0
            price = lambda b: np.exp(b)
            claim = TerminalClaim(values=np.maximum(strike - price(lattice.leaf_b()), 0.0), lattice=lattice)
            obstacle = rbsde.obstacle_from_fn(lambda t, b: np.maximum(strike - price(b), 0.0), lattice)
            sol = rbsde.solve_rbsde(bsde.zero_driver(), claim, obstacle, lattice)
            exh = rbsde.snell_oracle(claim, obstacle, lattice, method="exhaustive")
            return [ResultRow("rbsde-exactness", "amer", "N=3",
                              "american_put_vs_exhaustive", abs(float(sol.y.values[0][0]) - exh.value), 1e-12)]

        return run

    return [make(i) for i in range(count)] + [american(0)]


def _suite_two_representation(config: ExperimentConfig):
    count = _count(config, "twobsde-representation", 4)
    n_list = [int(x) for x in config.get_floats("params", "n_list", (3, 5, 8))]
    seed = config.seed

    def make(i):
        def run():
            rng = instance_rng(seed, i)
            n = n_list[i % len(n_list)]
            grid = TimeGrid(horizon=float(rng.uniform(0.75, 1.5)), steps=n)
            levels = tuple(sorted(rng.uniform(0.4, 1.3, size=2)))
            unc = twobsde.UncertaintySet(levels=levels)
            driver = random_driver(rng, monotone=bool(rng.random() < 0.5), max_ly=0.3, max_lz=0.3)
            spec = {"kind": str(rng.choice(["square", "abs", "call"]))}
            if spec["kind"] == "call":
                spec["strike"] = 0.1
            sol = twobsde.solve_2bsde(driver, spec, unc, grid)
            probes = twobsde.default_probe_controls(sol, rng)
            rows = []
            for tau in range(n + 1):
                rep = twobsde.representation_check(sol, tau, probe_controls=probes)
                rows.append(ResultRow("twobsde-representation", f"i{i:04d}", f"N={n};tau={tau}",
                                      "representation_gap", rep.max_abs_gap, 1e-10))
                rows.append(ResultRow("twobsde-representation", f"i{i:04d}", f"N={n};tau={tau}",
                                      "value_dominates_overshoot", rep.max_overshoot, 1e-12))
            bases = {"const0": twobsde.constant_regime_control(sol.joint, 0),
                     "argmax": sol.argmax_control}
            for name, base in bases.items():
                for tau in range(n + 1):
                    cert = twobsde.check_minimality(sol, tau, base, probe_controls=probes)
                    rows.append(ResultRow("twobsde-representation", f"i{i:04d}",
                                          f"N={n};tau={tau};base={name}",
                                          "minimality_inf_max", float(np.max(cert.infimum)), 1e-9))
                    rows.append(ResultRow("twobsde-representation", f"i{i:04d}",
                                          f"N={n};tau={tau};base={name}",
                                          "minimality_inf_neg", float(-np.min(cert.infimum)), 1e-12))
            return rows

        return run

    return [make(i) for i in range(count)]


def _suite_two_convex(config: ExperimentConfig):
    # joint-tree size is independent of [grid] n, which sizes the binary-tree suites
    n = config.get("params", "n_convex", 8, int)
    horizon = config.get("grid", "t", 1.0, float)

    def run():
        unc = twobsde.UncertaintySet(levels=(0.5, 1.0))
        driver = bsde.zero_driver()
        spec = {"kind": "square"}
        grid = TimeGrid(horizon=horizon, steps=n)
        sol = twobsde.solve_2bsde(driver, spec, unc, grid)
        exact = max(unc.levels) ** 2 * horizon
        rows = [ResultRow("twobsde-convex", "i0000", f"N={n}",
                          "value_vs_max_vol_square", abs(sol.value() - exact), 1e-10)]
        grid3 = TimeGrid(horizon=horizon, steps=3)
        sol3 = twobsde.solve_2bsde(driver, spec, unc, grid3)
        bf = twobsde.brute_force_value(sol3.joint, driver, sol3.xi)
        rows.append(ResultRow("twobsde-convex", "i0000", "N=3",
                              "dp_vs_control_enumeration", abs(sol3.value() - bf), 1e-12))
        for umax in (0.6, 0.8, 1.0):
            s = twobsde.solve_2bsde(driver, spec, twobsde.UncertaintySet(levels=(0.5, umax)),
                                    TimeGrid(horizon=horizon, steps=min(n, 6)))
            rows.append(ResultRow("twobsde-convex", "i0000", f"umax={umax}",
                                  "value_root", s.value()))
        return rows

    return [run]


def _suite_stability(config: ExperimentConfig):
    count = _count(config, "stability", 60)
    beta = config.get("params", "beta", 0.5, float)
    seed = config.seed

    def make(i):
        def run():
            rng = instance_rng(seed, i)
            lattice = random_lattice(rng, 2, 8)
            d1 = random_driver(rng, monotone=True)
            c1 = random_claim(rng, lattice)
            rows = []
            ident = bsde.stability_check(d1, c1, d1, c1, beta, lattice)
            rows.append(ResultRow("stability", f"i{i:04d}", f"N={lattice.steps}",
                                  "identical_pair_delta", ident.d_delta, 1e-12))
            d2 = random_driver(rng, monotone=True)
            c2 = TerminalClaim(values=c1.values + rng.normal(size=lattice.n_leaves), lattice=lattice)
            rep = bsde.stability_check(d1, c1, d2, c2, beta, lattice)
            rows.append(ResultRow("stability", f"i{i:04d}", f"N={lattice.steps}",
                                  "bsde_d_delta", rep.d_delta, rep.d_bound + 1e-10))
            obstacle = rbsde.obstacle_from_fn(lambda t, b: b - 1.0, lattice)
            rrep = rbsde.rbsde_stability_check(d1, c1, d2, c2, obstacle, beta, lattice)
            rows.append(ResultRow("stability", f"i{i:04d}", f"N={lattice.steps}",
                                  "rbsde_d_delta", rrep.d_delta, rrep.d_bound + 1e-10))
            return rows

        return run

    return [make(i) for i in range(count)]


def _suite_uniform_integrability(config: ExperimentConfig):
    def run():
        grid = TimeGrid(
            horizon=config.get("grid", "t", 1.0, float),
            steps=config.get("params", "n_ui", 8, int),
        )
        lattice = build_lattice(grid, config.get("regime", "sigma", 1.0, float))
        claim = _config_claim(config, lattice)
        L = config.get("params", "l", 0.5, float)
        levels = config.get_floats("params", "levels", (1.0, 2.0, 4.0, 8.0))
        family = [TerminalClaim(values=bsde.TruncationLevel(n).q(claim.values), lattice=lattice)
                  for n in levels]
        rep = nonlinexp.check_uniform_integrability(family + [claim], L, lattice)
        rows = []
        base = rep.epsilons[-1]  # untruncated claim
        for j, delta in enumerate(rep.deltas):
            worst_trunc = max(rep.epsilons[k][j] for k in range(len(levels)))
            rows.append(ResultRow("uniform-integrability", "i0000", f"delta={delta}",
                                  "truncated_family_epsilon", worst_trunc, base[j] + 1e-12))
        tails = nonlinexp.tail_functional(claim, L, lattice, levels)
        for n, v in zip(tails.levels, tails.values):
            rows.append(ResultRow("uniform-integrability", "i0000", f"n={n:g}",
                                  "tail_functional", v))
        margin = min(a - b for a, b in zip(tails.values, tails.values[1:]))
        rows.append(ResultRow("uniform-integrability", "i0000", "all",
                              "tail_monotone_margin", -margin, 1e-15))
        return rows

    return [run]


SUITES = {
    "oracle-equivalence": _suite_oracle,
    "doob": _suite_doob,
    "apriori": _suite_apriori,
    "comparison": _suite_comparison,
    "truncation": _suite_truncation,
    "rbsde-exactness": _suite_rbsde,
    "twobsde-representation": _suite_two_representation,
    "twobsde-convex": _suite_two_convex,
    "stability": _suite_stability,
    "uniform-integrability": _suite_uniform_integrability,
}


def suite_names() -> list[str]:
    return sorted(SUITES)


def make_instances(config: ExperimentConfig):
    from .config import ConfigError

    names = [n.strip() for n in config.name.split(",")] if config.name != "all" else suite_names()
    instances = []
    for name in names:
        if name not in SUITES:
            raise ConfigError(f"unknown experiment {name!r}; registered: {', '.join(suite_names())}")
        instances.extend(SUITES[name](config))
    return instances
