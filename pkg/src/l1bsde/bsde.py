"""Backward equation solver on the tree, truncation scheme, and estimate checks.

Per node the gradient component is the child-difference quotient (the exact
one-step martingale representation on a binary tree) and the value solves the
implicit one-dimensional fixed point ``y = E[Y_next] + dt * f(t, y, z)`` by
Picard iteration.  The scheme is implicit in y and explicit in z, so the
contraction condition is ``L_y * dt < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import PathLattice, TerminalClaim
from .nonlinexp import sup_expectation
from .norms import NodeProcess, d_norm, h_beta_norm, s_beta_norm

PICARD_TOL = 1e-14
PICARD_MAX_ITERS = 200


class PicardError(RuntimeError):
    """Per-node fixed point failed to converge."""


@dataclass(frozen=True)
class Driver:
    """Generator ``f(t, path, y, z)`` with explicit volatility argument.

    ``fn(k, b, sigma, y, z)`` must accept numpy arrays for ``b``, ``sigma``,
    ``y`` and ``z`` (one entry per node of slice ``k``) and return an array.
    ``lipschitz_y`` and ``lipschitz_z`` bound the increments
    ``|f(y1,z) - f(y2,z)| <= L_y |y1 - y2|`` and
    ``|f(y,z1) - f(y,z2)| <= L_z |sigma (z1 - z2)|``.
    """

    fn: Callable
    lipschitz_y: float
    lipschitz_z: float
    label: str = "driver"

    def evaluate(self, k, b, sigma, y, z) -> np.ndarray:
        return np.asarray(self.fn(k, b, sigma, y, z), dtype=float)

    def f0(self, k, b, sigma) -> np.ndarray:
        zero = np.zeros_like(np.asarray(b, dtype=float))
        return self.evaluate(k, b, sigma, zero, zero)


def zero_driver() -> Driver:
    return Driver(fn=lambda k, b, s, y, z: np.zeros_like(y), lipschitz_y=0.0, lipschitz_z=0.0, label="zero")


def constant_driver(c: float) -> Driver:
    return Driver(fn=lambda k, b, s, y, z: np.full_like(y, float(c)), lipschitz_y=0.0, lipschitz_z=0.0, label=f"const({c})")


def linear_driver(a: float, c: float, g0: Callable | None = None, label: str | None = None) -> Driver:
    """``f = g0(k, b) + a*y + c*sigma*z``; nonincreasing in y iff ``a <= 0``."""

    def fn(k, b, s, y, z):
        base = np.zeros_like(y) if g0 is None else np.broadcast_to(np.asarray(g0(k, b), dtype=float), y.shape)
        return base + a * y + c * (s * z)

    return Driver(fn=fn, lipschitz_y=abs(a), lipschitz_z=abs(c), label=label or f"linear(a={a},c={c})")


def probe_lipschitz(driver: Driver, lattice: PathLattice, rng, n_probes: int = 32) -> float:
    """Worst relative excess of the Lipschitz bound over random probe pairs."""
    worst = 0.0
    for _ in range(n_probes):
        t = int(rng.integers(0, lattice.steps))
        b, s = lattice.b[t], lattice.sigma[t]
        y1, y2 = rng.normal(size=2) * 3.0
        z1, z2 = rng.normal(size=2) * 3.0
        shape = b.shape
        f1 = driver.evaluate(t, b, s, np.full(shape, y1), np.full(shape, z1))
        f2 = driver.evaluate(t, b, s, np.full(shape, y2), np.full(shape, z2))
        allowed = driver.lipschitz_y * abs(y1 - y2) + driver.lipschitz_z * np.abs(s * (z1 - z2))
        worst = max(worst, float(np.max(np.abs(f1 - f2) - allowed)))
    return worst


def _implicit_step(driver: Driver, k: int, lattice: PathLattice, ey, z):
    """Solve ``y = ey + dt f(k, y, z)`` by Picard to 1e-14 (relative to scale)."""
    dt = lattice.grid.dt
    b, s = lattice.b[k], lattice.sigma[k]
    y = ey + dt * driver.evaluate(k, b, s, ey, z)
    for _ in range(PICARD_MAX_ITERS):
        nxt = ey + dt * driver.evaluate(k, b, s, y, z)
        err = float(np.max(np.abs(nxt - y)))
        y = nxt
        if err <= PICARD_TOL * max(1.0, float(np.max(np.abs(y)))):
            return y
    raise PicardError(f"fixed point did not converge at slice {k} (last err {err:.3g})")


def backward_solve(driver: Driver, terminal: np.ndarray, lattice: PathLattice, t_hi: int | None = None, t_lo: int = 0):
    """Backward recursion from ``terminal`` at slice ``t_hi`` down to ``t_lo``.

    Returns dicts ``{t: y_slice}`` and ``{t: z_slice}``.
    """
    if driver.lipschitz_y * lattice.grid.dt >= 1.0:
        raise ValueError(
            f"contraction violated: L_y*dt = {driver.lipschitz_y * lattice.grid.dt:.3g} >= 1; refine the grid"
        )
    t_hi = lattice.steps if t_hi is None else t_hi
    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape != (2**t_hi,):
        raise ValueError("terminal data must live on the requested slice")
    sq = lattice.grid.sqrt_dt
    y = {t_hi: terminal}
    z = {}
    for t in range(t_hi - 1, t_lo - 1, -1):
        nxt = y[t + 1]
        up, dn = nxt[0::2], nxt[1::2]
        z[t] = (up - dn) / (2.0 * lattice.sigma[t] * sq)
        y[t] = _implicit_step(driver, t, lattice, 0.5 * (up + dn), z[t])
    return y, z


@dataclass
class BsdeSolution:
    y: NodeProcess
    z: NodeProcess
    residual: float
    driver: Driver
    claim: TerminalClaim
    lattice: PathLattice


def equation_residual(driver: Driver, y_slices, z_slices, lattice: PathLattice) -> float:
    """Max one-step defect of ``y = E[Y_next] + dt f(t, y, z)`` over all nodes."""
    dt = lattice.grid.dt
    worst = 0.0
    for t in range(lattice.steps):
        nxt = y_slices[t + 1]
        ey = 0.5 * (nxt[0::2] + nxt[1::2])
        defect = y_slices[t] - ey - dt * driver.evaluate(t, lattice.b[t], lattice.sigma[t], y_slices[t], z_slices[t])
        worst = max(worst, float(np.max(np.abs(defect))))
    return worst


def solve_bsde(driver: Driver, claim: TerminalClaim, lattice: PathLattice, monotone_shift: bool = False) -> BsdeSolution:
    """Solve the backward equation with terminal data ``claim``.

    With ``monotone_shift`` the problem is first rescaled by a deterministic
    exponential factor that makes the driver nonincreasing in y (optional
    preprocessing; the result is mapped back, and must agree with the direct
    solve).
    """
    if monotone_shift:
        shifted_driver, shifted_terminal, factors = monotone_shifted_problem(driver, claim.values, lattice)
        ys, zs = backward_solve(shifted_driver, shifted_terminal, lattice)
        y_slices = [ys[t] / factors[t] for t in range(lattice.steps + 1)]
        z_slices = [zs[t] / factors[t + 1] for t in range(lattice.steps)]
    else:
        ys, zs = backward_solve(driver, claim.values, lattice)
        y_slices = [ys[t] for t in range(lattice.steps + 1)]
        z_slices = [zs[t] for t in range(lattice.steps)]
    residual = equation_residual(driver, y_slices, z_slices, lattice)
    return BsdeSolution(
        y=NodeProcess(values=y_slices, kind="adapted"),
        z=NodeProcess(values=z_slices, kind="increment"),
        residual=residual,
        driver=driver,
        claim=claim,
        lattice=lattice,
    )


def monotone_shifted_problem(driver: Driver, terminal: np.ndarray, lattice: PathLattice, rate: float | None = None):
    """Exponential-in-time rescaling that makes the driver nonincreasing in y.

    Returns (shifted driver, shifted terminal, per-slice factors c_t); the
    direct solution is recovered as ``Y_t = Y~_t / c_t``, ``Z_t = Z~_t / c_{t+1}``.
    The rescaled contraction needs ``L_y * dt < 1/3`` at the default rate.
    """
    dt = lattice.grid.dt
    ly = driver.lipschitz_y
    if rate is None:
        if ly * dt >= 1.0:
            raise ValueError("contraction violated; refine the grid")
        rate = -np.log1p(-ly * dt) / dt if ly > 0 else 0.0
    factors = np.exp(rate * dt * np.arange(lattice.steps + 1))
    growth = float(np.exp(rate * dt))

    def fn(k, b, s, y, z):
        ck, cn = factors[k], factors[k + 1]
        return (1.0 - cn / ck) / dt * y + cn * driver.evaluate(k, b, s, y / ck, z / cn)

    shifted = Driver(
        fn=fn,
        lipschitz_y=(growth - 1.0) / dt + growth * ly,
        lipschitz_z=driver.lipschitz_z,
        label=f"shifted({driver.label})",
    )
    return shifted, factors[-1] * np.asarray(terminal, dtype=float), factors


# ---------------------------------------------------------------------------
# truncation scheme


@dataclass(frozen=True)
class TruncationLevel:
    n: float

    def q(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.n
        with np.errstate(divide="ignore", invalid="ignore"):
            clipped = x * self.n / np.where(inside, 1.0, np.abs(x))
        return np.where(inside, x, clipped)  # identity inside the band, exactly


def truncated_problem(driver: Driver, claim: TerminalClaim, n: float):
    """Level-n bounded surrogate: clip the terminal data and the frozen part."""
    level = TruncationLevel(n=float(n))

    def fn(k, b, s, y, z):
        f = driver.evaluate(k, b, s, y, z)
        f0 = driver.f0(k, b, s)
        return f - f0 + level.q(f0)

    clipped = Driver(fn=fn, lipschitz_y=driver.lipschitz_y, lipschitz_z=driver.lipschitz_z,
                     label=f"{driver.label}|q{n:g}")
    return clipped, TerminalClaim(values=level.q(claim.values), lattice=claim.lattice, spec={"kind": "truncated"})


def frozen_tail_claim(driver: Driver, claim: TerminalClaim, n: float, lattice: PathLattice) -> np.ndarray:
    """Leaf values of ``|xi| 1{|xi|>=n} + sum_t |f0_t| 1{|f0_t|>=n} dt``."""
    dt = lattice.grid.dt
    acc = np.zeros(1)
    for t in range(lattice.steps):
        f0 = np.abs(driver.f0(t, lattice.b[t], lattice.sigma[t]))
        acc = np.repeat(acc + np.where(f0 >= n, f0, 0.0) * dt, 2)
    xi = np.abs(claim.values)
    return np.where(xi >= n, xi, 0.0) + acc


def delta_process(a: NodeProcess, b: NodeProcess) -> NodeProcess:
    return NodeProcess(values=[x - y for x, y in zip(a.values, b.values)], kind=a.kind)


@dataclass
class ConvergenceReport:
    levels: list[float]
    dist_d: dict
    dist_s: dict
    bounds: dict
    slack_tolerance: float
    verdict: bool
    details: dict = field(default_factory=dict)


def truncation_scheme(
    driver: Driver, claim: TerminalClaim, lattice: PathLattice, levels, beta: float = 0.5
) -> ConvergenceReport:
    """Solve the level-n surrogates and compare their spread to the data tails.

    Measured distances: to the unclipped solution per level, and between level
    pairs.  Each distance is bounded by the corresponding frozen tail
    sup-expectation; the inequality is exact on the lattice, so the verdict
    uses slack tolerance 1e-10 only for float noise.
    """
    levels = [float(n) for n in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    L = driver.lipschitz_z
    base = solve_bsde(driver, claim, lattice)
    solutions = {}
    for n in levels:
        drv_n, claim_n = truncated_problem(driver, claim, n)
        solutions[n] = solve_bsde(drv_n, claim_n, lattice)
    tol = 1e-10
    dist_d, dist_s, bounds = {}, {}, {}
    for n in levels:
        bounds[n] = sup_expectation(frozen_tail_claim(driver, claim, n, lattice), L, lattice).value
        dy = delta_process(base.y, solutions[n].y)
        dist_d[("limit", n)] = d_norm(dy, L, lattice)
        dist_s[("limit", n)] = s_beta_norm(dy, beta, L, lattice)
    for i, m in enumerate(levels):
        for n in levels[i + 1 :]:
            dy = delta_process(solutions[n].y, solutions[m].y)
            dist_d[(n, m)] = d_norm(dy, L, lattice)
            dist_s[(n, m)] = s_beta_norm(dy, beta, L, lattice)
    verdict = all(
        dist_d[key] <= bounds[key[1]] + tol for key in dist_d
    )
    return ConvergenceReport(
        levels=levels,
        dist_d=dist_d,
        dist_s=dist_s,
        bounds=bounds,
        slack_tolerance=tol,
        verdict=verdict,
        details={"beta": beta, "base_residual": base.residual},
    )


# ---------------------------------------------------------------------------
# comparison / stability / a priori / tower


@dataclass
class ComparisonReport:
    applicable: bool
    max_violation: float
    passed: bool


def drivers_ordered(d1: Driver, d2: Driver, lattice: PathLattice, rng, n_probes: int = 32, tol: float = 1e-12) -> bool:
    """Spot-check ``f1 <= f2`` on random (y, z) probes over every slice."""
    for _ in range(n_probes):
        yv = float(rng.normal()) * 2.0
        zv = float(rng.normal()) * 2.0
        for t in range(lattice.steps):
            b, s = lattice.b[t], lattice.sigma[t]
            y = np.full(b.shape, yv)
            z = np.full(b.shape, zv)
            if np.any(d1.evaluate(t, b, s, y, z) > d2.evaluate(t, b, s, y, z) + tol):
                return False
    return True


def comparison_check(
    d1: Driver, c1: TerminalClaim, d2: Driver, c2: TerminalClaim, lattice: PathLattice, rng=None
) -> ComparisonReport:
    """Ordered data must give ordered solutions, node by node."""
    rng = np.random.default_rng(0) if rng is None else rng
    if np.any(c1.values > c2.values) or not drivers_ordered(d1, d2, lattice, rng):
        return ComparisonReport(applicable=False, max_violation=0.0, passed=False)
    s1 = solve_bsde(d1, c1, lattice)
    s2 = solve_bsde(d2, c2, lattice)
    worst = max(float(np.max(a - b)) for a, b in zip(s1.y.values, s2.y.values))
    return ComparisonReport(applicable=True, max_violation=worst, passed=worst <= 1e-12)


def stability_constant(beta: float, L: float, horizon: float) -> float:
    """Implementation constant for the beta-norm stability report."""
    return np.exp(3.0 * L * L * horizon) / (1.0 - beta)


@dataclass
class StabilityReport:
    d_delta: float
    d_bound: float
    d_slack: float
    passed: bool
    beta_lhs: float
    beta_rhs: float
    constant: float


def _delta_driver_pathsum(d1: Driver, d2: Driver, sol1: BsdeSolution, lattice: PathLattice) -> np.ndarray:
    """Leaf values of ``sum_t |f2 - f1|(t, Y1_t, Z1_t) dt``."""
    dt = lattice.grid.dt
    acc = np.zeros(1)
    for t in range(lattice.steps):
        b, s = lattice.b[t], lattice.sigma[t]
        y, z = sol1.y.values[t], sol1.z.values[t]
        df = np.abs(d2.evaluate(t, b, s, y, z) - d1.evaluate(t, b, s, y, z))
        acc = np.repeat(acc + df * dt, 2)
    return acc


def stability_check(
    d1: Driver, c1: TerminalClaim, d2: Driver, c2: TerminalClaim, beta: float, lattice: PathLattice
) -> StabilityReport:
    """Perturbation bound: the solution spread is controlled by the data spread.

    The parameter-free stopping-norm bound is asserted (tolerance 1e-10); the
    beta-norm bound is reported against the implementation constant only, since
    the theory fixes no explicit constant.
    """
    L = max(d1.lipschitz_z, d2.lipschitz_z)
    s1 = solve_bsde(d1, c1, lattice)
    s2 = solve_bsde(d2, c2, lattice)
    dy = delta_process(s2.y, s1.y)
    dz = delta_process(s2.z, s1.z)
    df_pathsum = _delta_driver_pathsum(d1, d2, s1, lattice)
    d_bound = sup_expectation(np.abs(c2.values - c1.values) + df_pathsum, L, lattice).value
    d_delta = d_norm(dy, L, lattice)
    dxi = sup_expectation(np.abs(c2.values - c1.values), L, lattice).value
    dfs = sup_expectation(df_pathsum, L, lattice).value
    const = stability_constant(beta, L, lattice.grid.horizon)
    lhs = s_beta_norm(dy, beta, L, lattice) + h_beta_norm(dz, beta, L, lattice)
    rhs = const * (dxi**beta + dfs**beta)
    return StabilityReport(
        d_delta=d_delta,
        d_bound=d_bound,
        d_slack=d_bound - d_delta,
        passed=d_delta <= d_bound + 1e-10,
        beta_lhs=lhs,
        beta_rhs=rhs,
        constant=const,
    )


@dataclass
class AprioriReport:
    d_norm_y: float
    bound: float
    slack: float
    passed: bool
    beta_lhs: float
    beta_rhs: float


def apriori_estimate_check(solution: BsdeSolution, beta: float, L: float | None = None) -> AprioriReport:
    """Solution size against the sup-expected data size.

    The stopping-norm inequality is asserted at tolerance 1e-10 (it is exact on
    the lattice for nonincreasing-in-y drivers); the beta-norm pair is reported
    against the implementation constant.
    """
    lattice = solution.lattice
    driver = solution.driver
    L = driver.lipschitz_z if L is None else L
    data_leaf = frozen_tail_claim(driver, solution.claim, 0.0, lattice)  # n=0: plain |xi| + integral |f0|
    bound = sup_expectation(data_leaf, L, lattice).value
    dn = d_norm(solution.y, L, lattice)
    const = stability_constant(beta, L, lattice.grid.horizon)
    xi_part = sup_expectation(np.abs(solution.claim.values), L, lattice).value
    dt = lattice.grid.dt
    acc = np.zeros(1)
    for t in range(lattice.steps):
        acc = np.repeat(acc + np.abs(driver.f0(t, lattice.b[t], lattice.sigma[t])) * dt, 2)
    f0_part = sup_expectation(acc, L, lattice).value
    lhs = s_beta_norm(solution.y, beta, L, lattice) + h_beta_norm(solution.z, beta, L, lattice)
    rhs = const * (xi_part**beta + f0_part**beta)
    return AprioriReport(
        d_norm_y=dn,
        bound=bound,
        slack=bound - dn,
        passed=dn <= bound + 1e-10,
        beta_lhs=lhs,
        beta_rhs=rhs,
    )


@dataclass
class TowerReport:
    max_abs_diff: float
    passed: bool


def tower_property_check(driver: Driver, claim: TerminalClaim, lattice: PathLattice, k: int) -> TowerReport:
    """Solving on [k, T] and restarting from the slice-k values reproduces the solution."""
    if not 0 <= k <= lattice.steps:
        raise ValueError("k out of range")
    full, _ = backward_solve(driver, claim.values, lattice)
    tail_y, _ = backward_solve(driver, claim.values, lattice, t_hi=lattice.steps, t_lo=k)
    head_y, _ = backward_solve(driver, tail_y[k], lattice, t_hi=k, t_lo=0)
    worst = 0.0
    for t in range(k + 1):
        worst = max(worst, float(np.max(np.abs(head_y[t] - full[t]))))
    return TowerReport(max_abs_diff=worst, passed=worst <= 1e-12)


def linearization_coefficients(driver: Driver, k: int, b, sigma, y1, z1, y2, z2):
    """Difference-quotient fields (a, b) with ``f(y1,z1) - f(y2,z2) = a dy + b sigma dz``.

    The y-quotient is taken at ``z1`` and the z-quotient at ``y2``, so the
    telescoping reconstruction is exact; 0/0 is mapped to 0.
    """
    f11 = driver.evaluate(k, b, sigma, y1, z1)
    f21 = driver.evaluate(k, b, sigma, y2, z1)
    f22 = driver.evaluate(k, b, sigma, y2, z2)
    dy = np.asarray(y1, dtype=float) - np.asarray(y2, dtype=float)
    dz = np.asarray(sigma, dtype=float) * (np.asarray(z1, dtype=float) - np.asarray(z2, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(dy) > 0.0, (f11 - f21) / np.where(dy == 0.0, 1.0, dy), 0.0)
        bf = np.where(np.abs(dz) > 1e-14, (f21 - f22) / np.where(dz == 0.0, 1.0, dz), 0.0)
    # the quotients are Lipschitz-bounded in exact arithmetic; clip float noise
    a = np.clip(a, -driver.lipschitz_y, driver.lipschitz_y)
    bf = np.clip(bf, -driver.lipschitz_z, driver.lipschitz_z)
    return a, bf
