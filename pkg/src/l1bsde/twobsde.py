"""Second-order backward equation over a finite family of volatility regimes.

Admissible measures are adapted regime controls: per-node choices of a
volatility level from a finite set.  The joint tree labels every edge with a
(regime, sign) pair, so a node is exactly one observable path history and
different controls induce mutually singular laws on it.  The family is closed
under node-level pasting by construction, which is what justifies solving by
one backward maximisation; the value process dominates every per-control
backward solution and the domination gap is the per-control push.  The
right-limit regularisation of the continuous theory is the identity in
discrete time, so the value process itself carries the decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bsde import Driver, PICARD_MAX_ITERS, PICARD_TOL, PicardError, linearization_coefficients
from .lattice import CapExceededError, PathLattice, TimeGrid, claim_values_generic
from .nonlinexp import TailReport

JOINT_DEPTH_CAPS = {1: 22, 2: 14, 3: 9}


@dataclass(frozen=True)
class UncertaintySet:
    """Finite set of admissible volatility levels; pasting-closed by construction."""

    levels: tuple

    def __post_init__(self):
        if len(self.levels) < 1:
            raise ValueError("need at least one volatility level")
        if any(not lv > 0 for lv in self.levels):
            raise ValueError("volatility levels must be positive")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError("volatility levels must be distinct")

    @property
    def size(self) -> int:
        return len(self.levels)


def _joint_cap(n_regimes: int) -> int:
    if n_regimes in JOINT_DEPTH_CAPS:
        return JOINT_DEPTH_CAPS[n_regimes]
    # keep the explicit joint tree at or below the |U|=3 budget
    budget = 6**JOINT_DEPTH_CAPS[3]
    return int(np.floor(np.log(budget) / np.log(2 * n_regimes)))


class JointLattice:
    """Tree with one child per (regime, sign); child code ``2*u + s``, sign 0 = up."""

    def __init__(self, grid: TimeGrid, uncertainty: UncertaintySet):
        cap = _joint_cap(uncertainty.size)
        if grid.steps > cap:
            raise CapExceededError(
                f"steps={grid.steps} exceeds joint depth cap {cap} for {uncertainty.size} regimes"
            )
        self.grid = grid
        self.uncertainty = uncertainty
        self.levels = np.asarray(uncertainty.levels, dtype=float)
        self.branching = 2 * uncertainty.size
        sq = grid.sqrt_dt
        signed = np.empty(self.branching)
        signed[0::2] = self.levels * sq
        signed[1::2] = -self.levels * sq
        b = [np.zeros(1)]
        w = [np.zeros(1)]
        wsign = np.empty(self.branching)
        wsign[0::2] = sq
        wsign[1::2] = -sq
        for t in range(grid.steps):
            b.append((b[t][:, None] + signed[None, :]).reshape(-1))
            w.append((w[t][:, None] + wsign[None, :]).reshape(-1))
        self.b = b
        self.w = w

    @property
    def steps(self) -> int:
        return self.grid.steps

    @property
    def n_regimes(self) -> int:
        return self.uncertainty.size

    def slice_size(self, t: int) -> int:
        return self.branching**t

    def leaf_masses(self) -> np.ndarray:
        return np.full(self.slice_size(self.steps), 1.0 / self.slice_size(self.steps))


def joint_claim_values(joint: JointLattice, spec) -> np.ndarray:
    if callable(spec):
        return np.asarray(spec(joint.b[-1]), dtype=float)
    return claim_values_generic(spec, joint.b, joint.w[-1], joint.leaf_masses(), branching=joint.branching)


def _check_feasibility(driver: Driver, grid: TimeGrid):
    if driver.lipschitz_y * grid.dt >= 1.0:
        raise ValueError("contraction violated: L_y*dt >= 1; refine the grid")
    if driver.lipschitz_z * grid.sqrt_dt >= 1.0:
        raise ValueError("infeasible tilt: L_z*sqrt(dt) >= 1; refine the grid")


def _picard(driver: Driver, t: int, b, sigma, ey, z, dt: float):
    y = ey + dt * driver.evaluate(t, b, sigma, ey, z)
    for _ in range(PICARD_MAX_ITERS):
        nxt = ey + dt * driver.evaluate(t, b, sigma, y, z)
        err = float(np.max(np.abs(nxt - y)))
        y = nxt
        if err <= PICARD_TOL * max(1.0, float(np.max(np.abs(y)))):
            return y
    raise PicardError(f"fixed point did not converge at slice {t}")


def _candidate_values(joint: JointLattice, driver: Driver, t: int, cont: np.ndarray):
    """One-step backward value and gradient for every regime candidate.

    Returns arrays of shape (nodes, regimes).
    """
    nu = joint.n_regimes
    sq = joint.grid.sqrt_dt
    dt = joint.grid.dt
    resh = cont.reshape(-1, nu, 2)
    up, dn = resh[:, :, 0], resh[:, :, 1]
    z = (up - dn) / (2.0 * joint.levels[None, :] * sq)
    ey = 0.5 * (up + dn)
    m = resh.shape[0]
    b = np.broadcast_to(joint.b[t][:, None], (m, nu))
    sigma = np.broadcast_to(joint.levels[None, :], (m, nu))
    y = _picard(driver, t, b, sigma, ey, z, dt)
    return y, z


@dataclass
class TwoBsdeSolution:
    joint: JointLattice
    v: list
    z: list
    argmax_control: list
    driver: Driver
    xi: np.ndarray
    uncertainty: UncertaintySet
    claim_spec: dict = field(default_factory=dict)

    def value(self) -> float:
        return float(self.v[0][0])

    def decompose(self, control):
        """Per-measure view under one regime control: (equation report, push increments)."""
        return supersolution_check(self, control), kp_increments(self, control)


def solve_2bsde(driver: Driver, claim_spec, uncertainty: UncertaintySet, grid: TimeGrid) -> TwoBsdeSolution:
    """Backward maximisation over regimes of the one-step implicit operator.

    Per node the gradient is extracted from the chosen regime's child spread;
    regime ties resolve to the lowest level index.  Needs ``L_y*dt < 1``
    (contraction) and ``L_z*sqrt(dt) < 1`` (one-step operator monotone in the
    continuation values, which is what makes the maximisation exact).
    """
    _check_feasibility(driver, grid)
    joint = JointLattice(grid, uncertainty)
    xi = joint_claim_values(joint, claim_spec)
    n = joint.steps
    v = [None] * (n + 1)
    z = [None] * n
    argmax = [None] * n
    v[n] = xi
    for t in range(n - 1, -1, -1):
        y_cand, z_cand = _candidate_values(joint, driver, t, v[t + 1])
        am = np.argmax(y_cand, axis=1)
        rows = np.arange(y_cand.shape[0])
        v[t] = y_cand[rows, am]
        z[t] = z_cand[rows, am]
        argmax[t] = am.astype(np.int64)
    return TwoBsdeSolution(
        joint=joint,
        v=v,
        z=z,
        argmax_control=argmax,
        driver=driver,
        xi=xi,
        uncertainty=uncertainty,
        claim_spec=dict(claim_spec) if isinstance(claim_spec, dict) else {},
    )


# ---------------------------------------------------------------------------
# regime controls


def constant_regime_control(joint: JointLattice, u_idx: int) -> list:
    return [np.full(joint.slice_size(t), int(u_idx), dtype=np.int64) for t in range(joint.steps)]


def random_regime_control(joint: JointLattice, rng) -> list:
    return [
        rng.integers(0, joint.n_regimes, size=joint.slice_size(t)).astype(np.int64)
        for t in range(joint.steps)
    ]


def pasted_control(base: list, tail: list, k: int) -> list:
    """Agree with ``base`` strictly before step ``k``, follow ``tail`` from step ``k``.

    This is the smallest discrete deviation after observing the path up to
    time k: the pasted measure matches the base law on that path and is free
    from the step-k decision on, which is what makes the representation and
    minimality checks mutually consistent on the lattice.
    """
    return [base[t] if t < k else tail[t] for t in range(len(base))]


def control_children(joint: JointLattice, t: int, control_slice: np.ndarray):
    """Joint indices of the up/down children selected by a control at slice t."""
    base = np.arange(joint.slice_size(t), dtype=np.int64) * joint.branching + 2 * control_slice
    return base, base + 1


def control_value_slices(joint: JointLattice, driver: Driver, xi: np.ndarray, control: list):
    """Per-control backward solution at every joint node (not just the control's subtree).

    The value at a node depends on the control from that node onward only, so
    one pass serves every pasted variant of the control.
    """
    sq = joint.grid.sqrt_dt
    dt = joint.grid.dt
    n = joint.steps
    y = [None] * (n + 1)
    z = [None] * n
    y[n] = xi
    for t in range(n - 1, -1, -1):
        iu, idn = control_children(joint, t, control[t])
        up, dn = y[t + 1][iu], y[t + 1][idn]
        sig = joint.levels[control[t]]
        z[t] = (up - dn) / (2.0 * sig * sq)
        y[t] = _picard(driver, t, joint.b[t], sig, 0.5 * (up + dn), z[t], dt)
    return y, z


def kp_increments(solution: TwoBsdeSolution, control: list):
    """Push increments of the value process under a control, at every joint node.

    ``dk = V - E_control[V_next] - dt * F(V, z_control)``; nonnegative for every
    admissible control and exactly zero along the maximising regime choice.
    """
    joint = solution.joint
    sq = joint.grid.sqrt_dt
    dt = joint.grid.dt
    out = []
    for t in range(joint.steps):
        iu, idn = control_children(joint, t, control[t])
        up, dn = solution.v[t + 1][iu], solution.v[t + 1][idn]
        sig = joint.levels[control[t]]
        z = (up - dn) / (2.0 * sig * sq)
        f = solution.driver.evaluate(t, joint.b[t], sig, solution.v[t], z)
        out.append(solution.v[t] - 0.5 * (up + dn) - dt * f)
    return out


def control_subtree_index_maps(joint: JointLattice, control: list):
    """Binary-subtree node index -> joint node index, per slice."""
    idx = [np.zeros(1, dtype=np.int64)]
    for t in range(joint.steps):
        j = idx[t]
        base = j * joint.branching + 2 * control[t][j]
        nxt = np.empty(2 ** (t + 1), dtype=np.int64)
        nxt[0::2] = base
        nxt[1::2] = base + 1
        idx.append(nxt)
    return idx


def control_path_lattice(joint: JointLattice, control: list):
    """Binary tree a control actually charges, as a plain lattice, plus index maps."""
    idx = control_subtree_index_maps(joint, control)
    sigma_slices = [joint.levels[control[t][idx[t]]] for t in range(joint.steps)]
    return PathLattice(joint.grid, sigma_slices, label="regime-control"), idx


# ---------------------------------------------------------------------------
# checks


@dataclass
class SupersolutionReport:
    defect: float
    min_increment: float
    k_initial: float
    passed: bool


def supersolution_check(solution: TwoBsdeSolution, control: list) -> SupersolutionReport:
    """Pathwise one-step equation defect under a control, plus push positivity."""
    joint = solution.joint
    sq = joint.grid.sqrt_dt
    dt = joint.grid.dt
    dks = kp_increments(solution, control)
    defect = 0.0
    min_inc = np.inf
    for t in range(joint.steps):
        iu, idn = control_children(joint, t, control[t])
        up, dn = solution.v[t + 1][iu], solution.v[t + 1][idn]
        sig = joint.levels[control[t]]
        z = (up - dn) / (2.0 * sig * sq)
        f = solution.driver.evaluate(t, joint.b[t], sig, solution.v[t], z)
        for child, sign in ((up, 1.0), (dn, -1.0)):
            res = child + dt * f - sign * z * sig * sq + dks[t] - solution.v[t]
            defect = max(defect, float(np.max(np.abs(res))))
        min_inc = min(min_inc, float(np.min(dks[t])))
    if joint.steps == 0:
        min_inc = 0.0
    return SupersolutionReport(
        defect=defect,
        min_increment=min_inc,
        k_initial=0.0,
        passed=defect <= 1e-12 and min_inc >= -1e-12,
    )


@dataclass
class MinimalityCertificate:
    tau: int
    base_control: list
    infimum: np.ndarray
    per_probe: list
    verdict: bool


def _tilted_remainder(solution: TwoBsdeSolution, control: list, y_slices, z_slices, dks):
    """Conditional expected future push under the gradient-linearisation tilt.

    ``R(node) = dk(node) + tilted mean of R(children under the control)`` with
    the tilt built from the z-difference quotient between the value process and
    the per-control solution; ``R`` at depth k is the conditional expectation
    of the push accumulated from step k to maturity.
    """
    joint = solution.joint
    sq = joint.grid.sqrt_dt
    n = joint.steps
    r = np.zeros(joint.slice_size(n))
    slices = [None] * (n + 1)
    slices[n] = r
    for t in range(n - 1, -1, -1):
        iu, idn = control_children(joint, t, control[t])
        sig = joint.levels[control[t]]
        up, dn = solution.v[t + 1][iu], solution.v[t + 1][idn]
        z_from_v = (up - dn) / (2.0 * sig * sq)
        _, bcoef = linearization_coefficients(
            solution.driver, t, joint.b[t], sig, solution.v[t], z_from_v, y_slices[t], z_slices[t]
        )
        p = (1.0 + bcoef * sq) / 2.0
        r = dks[t] + p * r[iu] + (1.0 - p) * r[idn]
        slices[t] = r
    return slices


def check_minimality(
    solution: TwoBsdeSolution, tau: int, base_control: list, probe_controls=None, rng=None
) -> MinimalityCertificate:
    """Infimum over pasted controls of the tilted expected future push at step tau.

    Probes agree with the base control strictly before step tau and may
    deviate from the step-tau decision on; the counted push runs from step tau
    to maturity, matching the pasting.  The maximising control is always
    probed, which pins the infimum at zero up to float noise.  The certificate
    records the per-node infimum over probes restricted to the base control's
    subtree.
    """
    joint = solution.joint
    _check_feasibility(solution.driver, joint.grid)
    if not 0 <= tau <= joint.steps:
        raise ValueError("tau out of range")
    rng = np.random.default_rng(1) if rng is None else rng
    if probe_controls is None:
        probe_controls = default_probe_controls(solution, rng)
    idx = control_subtree_index_maps(joint, base_control)
    values = []
    for probe in probe_controls:
        control = pasted_control(base_control, probe, tau)
        y_slices, z_slices = control_value_slices(joint, solution.driver, solution.xi, control)
        dks = kp_increments(solution, control)
        r = _tilted_remainder(solution, control, y_slices, z_slices, dks)
        values.append(r[tau][idx[tau]])
    stacked = np.vstack(values)
    infimum = stacked.min(axis=0)
    verdict = bool(np.all(infimum >= -1e-12) and np.all(infimum <= 1e-9))
    return MinimalityCertificate(tau=tau, base_control=base_control, infimum=infimum, per_probe=values, verdict=verdict)


def default_probe_controls(solution: TwoBsdeSolution, rng, n_random: int = 2) -> list:
    joint = solution.joint
    probes = [solution.argmax_control]
    probes += [constant_regime_control(joint, u) for u in range(joint.n_regimes)]
    probes += [random_regime_control(joint, rng) for _ in range(n_random)]
    return probes


@dataclass
class RepresentationReport:
    tau: int
    max_abs_gap: float
    max_overshoot: float
    passed: bool


def representation_check(solution: TwoBsdeSolution, tau: int, probe_controls=None, rng=None) -> RepresentationReport:
    """Value process equals the best per-control solution over pasted probes.

    The per-control value at a step-tau node is independent of the control
    before tau, so full control maps stand in for every pasted family member.
    The maximising control is probed, forcing equality; every probe must stay
    below the value process.
    """
    joint = solution.joint
    if not 0 <= tau <= joint.steps:
        raise ValueError("tau out of range")
    rng = np.random.default_rng(2) if rng is None else rng
    if probe_controls is None:
        probe_controls = default_probe_controls(solution, rng)
    best = None
    overshoot = -np.inf
    for control in probe_controls:
        y_slices, _ = control_value_slices(joint, solution.driver, solution.xi, control)
        for t in range(joint.steps + 1):
            overshoot = max(overshoot, float(np.max(y_slices[t] - solution.v[t])))
        cand = y_slices[tau]
        best = cand if best is None else np.maximum(best, cand)
    gap = float(np.max(np.abs(solution.v[tau] - best)))
    return RepresentationReport(
        tau=tau, max_abs_gap=gap, max_overshoot=overshoot, passed=gap <= 1e-10 and overshoot <= 1e-12
    )


@dataclass
class DppReport:
    k: int
    max_abs_diff: float
    passed: bool


def dpp_check(solution: TwoBsdeSolution, k: int) -> DppReport:
    """Re-running the backward maximisation from the step-k values reproduces them."""
    joint = solution.joint
    if not 0 <= k <= joint.steps:
        raise ValueError("k out of range")
    v = solution.v[k]
    worst = 0.0
    for t in range(k - 1, -1, -1):
        y_cand, _ = _candidate_values(joint, solution.driver, t, v)
        v = y_cand.max(axis=1)
        worst = max(worst, float(np.max(np.abs(v - solution.v[t]))))
    return DppReport(k=k, max_abs_diff=worst, passed=worst <= 1e-12)


@dataclass
class Comparison2Report:
    applicable: bool
    max_violation: float
    passed: bool


def comparison_2bsde(
    d1: Driver, spec1, d2: Driver, spec2, uncertainty: UncertaintySet, grid: TimeGrid, rng=None
) -> Comparison2Report:
    """Ordered data give ordered value processes, joint-node by joint-node."""
    rng = np.random.default_rng(3) if rng is None else rng
    s1 = solve_2bsde(d1, spec1, uncertainty, grid)
    s2 = solve_2bsde(d2, spec2, uncertainty, grid)
    if np.any(s1.xi > s2.xi):
        return Comparison2Report(False, 0.0, False)
    joint = s1.joint
    for _ in range(16):
        yv, zv = float(rng.normal()) * 2.0, float(rng.normal()) * 2.0
        for t in range(joint.steps):
            b = joint.b[t]
            for lv in joint.levels:
                sig = np.full(b.shape, lv)
                y = np.full(b.shape, yv)
                z = np.full(b.shape, zv)
                if np.any(d1.evaluate(t, b, sig, y, z) > d2.evaluate(t, b, sig, y, z) + 1e-12):
                    return Comparison2Report(False, 0.0, False)
    worst = max(float(np.max(a - b)) for a, b in zip(s1.v, s2.v))
    return Comparison2Report(True, worst, worst <= 1e-12)


def v_integrability_check(solution: TwoBsdeSolution, L: float, levels) -> TailReport:
    """Tail functional of the value magnitude: worst stop, regime, and kernel.

    Triple backward maximisation per level; the level values decrease.
    """
    joint = solution.joint
    sq = joint.grid.sqrt_dt
    if L * sq >= 1.0:
        raise ValueError("infeasible kernel bound; refine the grid")
    levels = [float(n) for n in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    nu = joint.n_regimes
    values = []
    for n in levels:
        gated = [np.where(np.abs(v) >= n, np.abs(v), 0.0) for v in solution.v]
        v = gated[joint.steps]
        for t in range(joint.steps - 1, -1, -1):
            resh = v.reshape(-1, nu, 2)
            up, dn = resh[:, :, 0], resh[:, :, 1]
            cand = 0.5 * (up + dn) + L * sq * np.abs(0.5 * (up - dn))
            v = np.maximum(gated[t], cand.max(axis=1))
        values.append(float(v[0]))
    top = values[-1] if values else 0.0
    satisfied = bool(top == 0.0 or (values and top <= 0.9 * values[0]))
    return TailReport(levels=levels, values=values, satisfied=satisfied, top_level_value=top)


# ---------------------------------------------------------------------------
# oracle and embeddings


def brute_force_value(joint: JointLattice, driver: Driver, xi: np.ndarray, max_enumeration: int = 200_000) -> float:
    """Enumerate every subtree-restricted adapted regime control, maximise the root value.

    Independent of the backward maximisation: the recursion collects one value
    per control combination and never takes an inner maximum.
    """
    nu = joint.n_regimes
    counts = [1]
    for _ in range(joint.steps):
        counts.append(nu * counts[-1] ** 2)
    if counts[-1] > max_enumeration:
        raise ValueError(f"enumeration too large: {counts[-1]} controls")
    sq = joint.grid.sqrt_dt
    dt = joint.grid.dt

    def rec(t: int, j: int) -> list:
        if t == joint.steps:
            return [float(xi[j])]
        out = []
        b = np.array([joint.b[t][j]])
        for u in range(nu):
            sig = np.array([joint.levels[u]])
            ups = rec(t + 1, j * joint.branching + 2 * u)
            dns = rec(t + 1, j * joint.branching + 2 * u + 1)
            for vu in ups:
                for vd in dns:
                    z = np.array([(vu - vd) / (2.0 * joint.levels[u] * sq)])
                    ey = np.array([0.5 * (vu + vd)])
                    out.append(float(_picard(driver, t, b, sig, ey, z, dt)[0]))
        return out

    return max(rec(0, 0))


def embed_index_maps(small: JointLattice, big: JointLattice, level_indices) -> list:
    """Joint-node index maps embedding a regime subset's tree into a superset's tree."""
    level_indices = np.asarray(level_indices, dtype=np.int64)
    codes_small = np.arange(small.branching, dtype=np.int64)
    codes_big = 2 * level_indices[codes_small // 2] + codes_small % 2
    idx = [np.zeros(1, dtype=np.int64)]
    for t in range(small.steps):
        nxt = (idx[t][:, None] * big.branching + codes_big[None, :]).reshape(-1)
        idx.append(nxt)
    return idx
