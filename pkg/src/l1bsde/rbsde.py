"""Reflected backward equation: obstacle, minimal push, and stopping oracles.

The discrete reflection is exact: per node, solve the unreflected implicit
step, lift to the obstacle, and charge the push so the one-step equation holds
with the driver evaluated at the reflected value.  The push is then strictly
complementary with the gap to the obstacle, which is the whole content of the
minimal-push condition here.  A ``-inf`` obstacle recovers the plain equation
with zero push.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .bsde import Driver, _implicit_step, delta_process
from .lattice import PathLattice, TerminalClaim
from .nonlinexp import optimal_stopping_sup_expectation, sup_expectation
from .norms import NodeProcess, d_norm, h_beta_norm, s_beta_norm


@dataclass
class ObstaclePath:
    """Per-slice obstacle values on non-terminal nodes; ``-inf`` disables a node.

    The terminal slice is never reflected: the solution ends at the claim.
    """

    values: list[np.ndarray]

    def __post_init__(self):
        self.values = [np.asarray(v, dtype=float) for v in self.values]
        for t, arr in enumerate(self.values):
            if arr.shape != (2**t,):
                raise ValueError(f"obstacle slice {t} must have length {2**t}")
            if np.any(np.isnan(arr)) or np.any(arr == np.inf):
                raise ValueError("obstacle values must be in [-inf, inf)")

    @property
    def steps(self) -> int:
        return len(self.values)

    def positive_part_tail(self, L: float, lattice: PathLattice, levels):
        """Stopping-sup of the clipped positive part per level (decreasing)."""
        out = []
        for n in levels:
            payoff = [np.where(np.maximum(v, 0.0) >= n, np.maximum(v, 0.0), 0.0) for v in self.values]
            payoff.append(np.zeros(lattice.n_leaves))
            out.append(float(optimal_stopping_sup_expectation(payoff, L, lattice)[0][0]))
        return out


def no_obstacle(lattice: PathLattice) -> ObstaclePath:
    return ObstaclePath(values=[np.full(2**t, -np.inf) for t in range(lattice.steps)])


def constant_obstacle(c: float, lattice: PathLattice) -> ObstaclePath:
    return ObstaclePath(values=[np.full(2**t, float(c)) for t in range(lattice.steps)])


def obstacle_from_fn(fn, lattice: PathLattice) -> ObstaclePath:
    """Obstacle ``fn(t, b_slice) -> values`` evaluated on every non-terminal slice."""
    vals = [np.broadcast_to(np.asarray(fn(t, lattice.b[t]), dtype=float), (2**t,)).copy() for t in range(lattice.steps)]
    return ObstaclePath(values=vals)


def clip_obstacle(obstacle: ObstaclePath, n: float) -> ObstaclePath:
    return ObstaclePath(values=[np.minimum(v, n) for v in obstacle.values])


@dataclass
class RbsdeSolution:
    y: NodeProcess
    z: NodeProcess
    k_increments: list[np.ndarray]
    k_cumulative: NodeProcess
    skorokhod_defect: float
    residual: float
    driver: Driver
    claim: TerminalClaim
    obstacle: ObstaclePath
    lattice: PathLattice


def _cumulative_push(increments, lattice: PathLattice) -> NodeProcess:
    slices = [np.zeros(1)]
    for t in range(lattice.steps):
        slices.append(np.repeat(slices[t] + increments[t], 2))
    return NodeProcess(values=slices, kind="adapted")


def solve_rbsde(driver: Driver, claim: TerminalClaim, obstacle: ObstaclePath, lattice: PathLattice) -> RbsdeSolution:
    """Backward reflected solve.

    Per node: ``y_free`` is the unreflected implicit value, the solution is
    ``max(y_free, S)``, and the push increment is sized so the one-step
    equation holds with the driver read at the reflected value (zero off the
    obstacle).  Complementarity ``push * (Y - S) = 0`` then holds by
    construction and is reported as a defect.
    """
    if obstacle.steps != lattice.steps:
        raise ValueError("obstacle must cover every non-terminal slice")
    if driver.lipschitz_y * lattice.grid.dt >= 1.0:
        raise ValueError(
            f"contraction violated: L_y*dt = {driver.lipschitz_y * lattice.grid.dt:.3g} >= 1; refine the grid"
        )
    dt = lattice.grid.dt
    sq = lattice.grid.sqrt_dt
    n = lattice.steps
    y = [None] * (n + 1)
    z = [None] * n
    dks = [None] * n
    y[n] = claim.values.copy()
    defect = 0.0
    residual = 0.0
    for t in range(n - 1, -1, -1):
        nxt = y[t + 1]
        up, dn = nxt[0::2], nxt[1::2]
        z[t] = (up - dn) / (2.0 * lattice.sigma[t] * sq)
        ey = 0.5 * (up + dn)
        free = _implicit_step(driver, t, lattice, ey, z[t])
        s = obstacle.values[t]
        reflected = s > free
        yt = np.where(reflected, s, free)
        f_at = driver.evaluate(t, lattice.b[t], lattice.sigma[t], yt, z[t])
        gap = yt - ey - dt * f_at
        dk = np.where(reflected, np.maximum(gap, 0.0), 0.0)
        residual = max(residual, float(np.max(np.abs(yt - ey - dt * f_at - dk))))
        with np.errstate(invalid="ignore"):
            comp = np.where(dk > 0.0, (yt - s) * dk, 0.0)
        defect = max(defect, float(np.max(np.abs(comp))))
        y[t] = yt
        dks[t] = dk
    return RbsdeSolution(
        y=NodeProcess(values=y, kind="adapted"),
        z=NodeProcess(values=z, kind="increment"),
        k_increments=dks,
        k_cumulative=_cumulative_push(dks, lattice),
        skorokhod_defect=defect,
        residual=residual,
        driver=driver,
        claim=claim,
        obstacle=obstacle,
        lattice=lattice,
    )


# ---------------------------------------------------------------------------
# optimal stopping oracles (driver-free case)


@dataclass
class SnellResult:
    value: float
    slices: list[np.ndarray] | None
    method: str


def snell_oracle(claim: TerminalClaim, obstacle: ObstaclePath, lattice: PathLattice, method: str = "dp") -> SnellResult:
    """Optimal stopping of the obstacle payoff (claim at maturity), untilted measure.

    ``dp`` returns the full value slices; ``exhaustive`` enumerates every
    adapted stop/continue map on the decision nodes (at most 14) and is the
    independent oracle.
    """
    if method == "dp":
        v = claim.values.copy()
        slices = [None] * (lattice.steps + 1)
        slices[lattice.steps] = v
        for t in range(lattice.steps - 1, -1, -1):
            cont = 0.5 * (v[0::2] + v[1::2])
            v = np.maximum(obstacle.values[t], cont)
            slices[t] = v
        return SnellResult(value=float(v[0]), slices=slices, method="dp")
    if method != "exhaustive":
        raise ValueError("method must be 'dp' or 'exhaustive'")
    n = lattice.steps
    n_decision = 2**n - 1
    if n_decision > 14:
        raise ValueError(f"instance too large for enumeration: {n_decision} decision nodes > 14")
    prob = 0.5**n
    offset = [2**t - 1 for t in range(n)]
    best = -np.inf
    for bits in product((False, True), repeat=n_decision):
        total = 0.0
        for leaf in range(2**n):
            node = 0
            stopped = None
            for t in range(n):
                if bits[offset[t] + node]:
                    stopped = obstacle.values[t][node]
                    break
                node = (node << 1) | ((leaf >> (n - 1 - t)) & 1)
            payoff = claim.values[leaf] if stopped is None else stopped
            total += prob * payoff
        best = max(best, total)
    return SnellResult(value=float(best), slices=None, method="exhaustive")


# ---------------------------------------------------------------------------
# obstacle truncation and the paired checks


@dataclass
class ObstacleConvergenceReport:
    levels: list[float]
    pair_dist_d: dict
    bounds: dict
    monotone: bool
    verdict: bool
    slack_tolerance: float = 1e-10


def obstacle_truncation_scheme(
    driver: Driver, claim: TerminalClaim, obstacle: ObstaclePath, lattice: PathLattice, levels
) -> ObstacleConvergenceReport:
    """Clip the obstacle at each level and compare the solutions.

    For levels n >= m the solution spread is bounded by the stopping-sup of the
    obstacle's positive part beyond m, and the solutions increase with the
    level (comparison in the obstacle).
    """
    levels = [float(n) for n in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    L = driver.lipschitz_z
    sols = {n: solve_rbsde(driver, claim, clip_obstacle(obstacle, n), lattice) for n in levels}
    pos_tails = dict(zip(levels, obstacle.positive_part_tail(L, lattice, levels)))
    pair_dist, bounds = {}, {}
    monotone = True
    verdict = True
    for i, m in enumerate(levels):
        for n in levels[i + 1 :]:
            dy = delta_process(sols[n].y, sols[m].y)
            dist = d_norm(dy, L, lattice)
            pair_dist[(n, m)] = dist
            bounds[(n, m)] = pos_tails[m]
            if dist > pos_tails[m] + 1e-10:
                verdict = False
            if any(np.min(a - b) < -1e-12 for a, b in zip(sols[n].y.values, sols[m].y.values)):
                monotone = False
    return ObstacleConvergenceReport(
        levels=levels, pair_dist_d=pair_dist, bounds=bounds, monotone=monotone, verdict=verdict and monotone
    )


@dataclass
class RComparisonReport:
    applicable: bool
    max_violation: float
    passed: bool


def rbsde_comparison_check(
    d1: Driver, c1: TerminalClaim, o1: ObstaclePath,
    d2: Driver, c2: TerminalClaim, o2: ObstaclePath,
    lattice: PathLattice, rng=None,
) -> RComparisonReport:
    """Ordered claim, driver and obstacle give ordered reflected solutions."""
    from .bsde import drivers_ordered

    rng = np.random.default_rng(0) if rng is None else rng
    obstacles_ordered = all(np.all(a <= b) for a, b in zip(o1.values, o2.values))
    if np.any(c1.values > c2.values) or not obstacles_ordered or not drivers_ordered(d1, d2, lattice, rng):
        return RComparisonReport(applicable=False, max_violation=0.0, passed=False)
    s1 = solve_rbsde(d1, c1, o1, lattice)
    s2 = solve_rbsde(d2, c2, o2, lattice)
    worst = max(float(np.max(a - b)) for a, b in zip(s1.y.values, s2.y.values))
    return RComparisonReport(applicable=True, max_violation=worst, passed=worst <= 1e-12)


@dataclass
class RStabilityReport:
    d_delta: float
    d_bound: float
    d_slack: float
    passed: bool
    k_beta_delta: float
    beta_lhs: float
    beta_rhs: float


def rbsde_stability_check(
    d1: Driver, c1: TerminalClaim, d2: Driver, c2: TerminalClaim,
    obstacle: ObstaclePath, beta: float, lattice: PathLattice,
) -> RStabilityReport:
    """Same obstacle, perturbed data: solution spread against data spread.

    Asserts the parameter-free stopping-norm bound; reports the beta-norm side
    including the push difference.
    """
    from .bsde import _delta_driver_pathsum, stability_constant

    L = max(d1.lipschitz_z, d2.lipschitz_z)
    s1 = solve_rbsde(d1, c1, obstacle, lattice)
    s2 = solve_rbsde(d2, c2, obstacle, lattice)
    dy = delta_process(s2.y, s1.y)
    dz = delta_process(s2.z, s1.z)
    dk = delta_process(s2.k_cumulative, s1.k_cumulative)
    df_pathsum = _delta_driver_pathsum(d1, d2, s1, lattice)
    d_bound = sup_expectation(np.abs(c2.values - c1.values) + df_pathsum, L, lattice).value
    d_delta = d_norm(dy, L, lattice)
    dxi = sup_expectation(np.abs(c2.values - c1.values), L, lattice).value
    dfs = sup_expectation(df_pathsum, L, lattice).value
    const = stability_constant(beta, L, lattice.grid.horizon)
    k_delta = s_beta_norm(dk, beta, L, lattice)
    lhs = s_beta_norm(dy, beta, L, lattice) + h_beta_norm(dz, beta, L, lattice) + k_delta
    rhs = const * (dxi**beta + dfs**beta)
    return RStabilityReport(
        d_delta=d_delta,
        d_bound=d_bound,
        d_slack=d_bound - d_delta,
        passed=d_delta <= d_bound + 1e-10,
        k_beta_delta=k_delta,
        beta_lhs=lhs,
        beta_rhs=rhs,
    )


@dataclass
class ZkReport:
    numerator: float
    denominator: float
    ratio: float


def zk_estimate_check(solution: RbsdeSolution, beta: float, L: float | None = None) -> ZkReport:
    """Size of (Z, K) against the solution and data sizes, as a reported ratio.

    No Y-side a priori bound exists for the reflected equation, so nothing is
    asserted here beyond finiteness; refinement stability is checked by the
    harness across grids.
    """
    lattice = solution.lattice
    driver = solution.driver
    L = driver.lipschitz_z if L is None else L
    num = h_beta_norm(solution.z, beta, L, lattice) + s_beta_norm(solution.k_cumulative, beta, L, lattice)
    dt = lattice.grid.dt
    acc = np.zeros(1)
    for t in range(lattice.steps):
        acc = np.repeat(acc + np.abs(driver.f0(t, lattice.b[t], lattice.sigma[t])) * dt, 2)
    f0_part = sup_expectation(acc, L, lattice).value
    den = (
        s_beta_norm(solution.y, beta, L, lattice)
        + d_norm(solution.y, L, lattice) ** beta
        + f0_part**beta
    )
    ratio = num / den if den > 0 else (0.0 if num == 0.0 else np.inf)
    return ZkReport(numerator=num, denominator=den, ratio=float(ratio))
