"""Sup-over-kernel expectation on the tree, its oracle, and tail diagnostics.

The expectation operator maximises a claim's mean over all adapted drift
kernels bounded by ``L``.  One backward step is affine in the kernel value, so
the per-node maximiser is bang-bang (``+L`` when the up child is worth more,
``-L`` otherwise, ``+L`` on ties); concatenation stability of the kernel family
is what lets the per-node maximisation realise the global supremum.  Adapted
node functions exhaust the admissible kernel class on a finite tree, so there
is no gap between the dynamic program and the abstract supremum.

All reductions follow a fixed slice order, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import DriftControl, PathLattice, TerminalClaim, TiltedMeasure, tilt


def _leaf_values(claim) -> np.ndarray:
    if isinstance(claim, TerminalClaim):
        return claim.values
    return np.asarray(claim, dtype=float)


def _check_kernel_bound(L: float, lattice: PathLattice):
    if L < 0:
        raise ValueError("kernel bound L must be nonnegative")
    if L * lattice.grid.sqrt_dt >= 1.0:
        raise ValueError(
            f"infeasible kernel bound: L*sqrt(dt) = {L * lattice.grid.sqrt_dt:.3g} >= 1"
        )


@dataclass
class SupExpectationResult:
    value: float
    optimal_control: DriftControl
    method: str


def sup_expectation_slices(claim, L: float, lattice: PathLattice):
    """Backward maximisation; returns (value slices, argmax kernel slices)."""
    _check_kernel_bound(L, lattice)
    sq = lattice.grid.sqrt_dt
    v = _leaf_values(claim).copy()
    slices = [None] * (lattice.steps + 1)
    slices[lattice.steps] = v
    lam = [None] * lattice.steps
    for t in range(lattice.steps - 1, -1, -1):
        up, dn = v[0::2], v[1::2]
        spread = 0.5 * (up - dn)
        lam[t] = np.where(spread >= 0.0, L, -L)
        v = 0.5 * (up + dn) + L * sq * np.abs(spread)
        slices[t] = v
    return slices, lam


def sup_expectation(claim, L: float, lattice: PathLattice) -> SupExpectationResult:
    """Largest expectation of the claim over adapted kernels bounded by ``L``."""
    slices, lam = sup_expectation_slices(claim, L, lattice)
    control = DriftControl(lam=lam, bound=L)
    return SupExpectationResult(value=float(slices[0][0]), optimal_control=control, method="dp")


def brute_force_sup_expectation(claim, L: float, lattice: PathLattice) -> SupExpectationResult:
    """Exhaustive oracle: every bang-bang adapted kernel, one expectation each.

    Independent of the dynamic program on purpose; the instance must have at
    most 14 decision (non-terminal) nodes.
    """
    _check_kernel_bound(L, lattice)
    n = lattice.steps
    n_decision = 2**n - 1
    if n_decision > 14:
        raise ValueError(f"instance too large for enumeration: {n_decision} decision nodes > 14")
    values = _leaf_values(claim)
    offsets = [2**t - 1 for t in range(n)]  # node (t, i) -> bit offset
    best = -np.inf
    best_lam = None
    for mask in range(2**n_decision):
        lam = []
        for t in range(n):
            bits = (mask >> offsets[t]) & ((1 << 2**t) - 1)
            arr = np.array([(bits >> i) & 1 for i in range(2**t)], dtype=float)
            lam.append(np.where(arr > 0, L, -L))
        control = DriftControl(lam=lam, bound=L)
        val = tilt(lattice, control).expectation(values)
        if val > best:
            best = val
            best_lam = lam
    return SupExpectationResult(
        value=float(best),
        optimal_control=DriftControl(lam=best_lam, bound=L),
        method="brute-force",
    )


def optimal_stopping_sup_expectation(payoff_slices, L: float, lattice: PathLattice):
    """Joint supremum over adapted stopping rules and kernels of a payoff process.

    ``v(node) = max(payoff(node), best one-step tilted mean of v(children))``;
    both suprema commute with the recursion by pasting, so the root value is the
    exact double supremum.  Returns all value slices.
    """
    _check_kernel_bound(L, lattice)
    sq = lattice.grid.sqrt_dt
    v = np.asarray(payoff_slices[lattice.steps], dtype=float).copy()
    out = [None] * (lattice.steps + 1)
    out[lattice.steps] = v
    for t in range(lattice.steps - 1, -1, -1):
        up, dn = v[0::2], v[1::2]
        cont = 0.5 * (up + dn) + L * sq * np.abs(0.5 * (up - dn))
        v = np.maximum(np.asarray(payoff_slices[t], dtype=float), cont)
        out[t] = v
    return out


@dataclass
class TailReport:
    levels: list[float]
    values: list[float]
    satisfied: bool
    top_level_value: float


def tail_functional(claim, L: float, lattice: PathLattice, levels) -> TailReport:
    """Sup-expectation of ``|claim|`` restricted to exceedance sets, per level."""
    levels = [float(n) for n in levels]
    if any(n < 0 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be nonnegative and strictly increasing")
    absval = np.abs(_leaf_values(claim))
    values = []
    for n in levels:
        masked = np.where(absval >= n, absval, 0.0)
        values.append(sup_expectation(masked, L, lattice).value)
    top = values[-1] if values else 0.0
    # decay heuristic for the tested range only; the theory wants the limit
    satisfied = bool(top == 0.0 or (values and top <= 0.9 * values[0]))
    return TailReport(levels=levels, values=values, satisfied=satisfied, top_level_value=top)


DEFAULT_DELTA_GRID = (0.1, 0.03, 0.01, 0.003, 0.001)


@dataclass
class UniformIntegrabilityReport:
    deltas: list[float]
    stopping_sups: list[float]           # condition (a), one per family member
    epsilons: list[list[float]]          # member x delta
    worst_epsilons: list[float]          # per delta, max over members
    events: list[list[np.ndarray]] = field(repr=False, default_factory=list)


def _as_payoff_slices(member, lattice: PathLattice):
    if isinstance(member, (TerminalClaim, np.ndarray)):
        vals = _leaf_values(member)
        zero_like = [np.zeros(2**t) for t in range(lattice.steps)]
        return zero_like + [np.abs(vals)]
    slices = getattr(member, "values", member)
    return [np.abs(np.asarray(s, dtype=float)) for s in slices]


def sup_measure(leaf_indicator: np.ndarray, L: float, lattice: PathLattice) -> float:
    """Largest probability of a leaf event over the kernel family."""
    return sup_expectation(leaf_indicator.astype(float), L, lattice).value


def _greedy_event(order: np.ndarray, L: float, lattice: PathLattice, delta: float) -> np.ndarray:
    """Maximal prefix of the given leaf order whose sup-measure stays <= delta."""

    def prefix_ok(k: int) -> bool:
        ind = np.zeros(len(order))
        ind[order[:k]] = 1.0
        return sup_measure(ind, L, lattice) <= delta

    lo, hi = 0, len(order)  # sup-measure is monotone in the prefix, so bisect
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if prefix_ok(mid):
            lo = mid
        else:
            hi = mid - 1
    ind = np.zeros(len(order))
    ind[order[:lo]] = 1.0
    return ind


def check_uniform_integrability(
    family, L: float, lattice: PathLattice, delta_grid=DEFAULT_DELTA_GRID
) -> UniformIntegrabilityReport:
    """Two-sided uniform-integrability diagnostic for a finite process family.

    (a) the stopping-rule supremum of each member's sup-expected magnitude is
    computed (finite by construction here, reported for profiling); (b) for each
    delta, an adversarial leaf event is built greedily from the largest-
    magnitude leaves subject to sup-measure <= delta, and the member's
    sup-expectation on that event is reported.  Small (b)-profiles uniformly
    over the family are the falsifiable content; the event class is restricted
    to magnitude-ordered leaf unions, the extremal case.
    """
    deltas = [float(d) for d in delta_grid]
    stopping_sups = []
    epsilons = []
    events = []
    for member in family:
        payoff = _as_payoff_slices(member, lattice)
        stopping_sups.append(float(optimal_stopping_sup_expectation(payoff, L, lattice)[0][0]))
        order = np.argsort(-payoff[lattice.steps], kind="stable")
        row = []
        row_events = []
        for delta in deltas:
            ind = _greedy_event(order, L, lattice, delta)
            # after stopping, the kernel keeps running to catch the event, so the
            # stopped payoff is magnitude times the sup-measure profile of A
            m_slices, _ = sup_expectation_slices(ind, L, lattice)
            gated = [payoff[t] * m_slices[t] for t in range(lattice.steps + 1)]
            row.append(float(optimal_stopping_sup_expectation(gated, L, lattice)[0][0]))
            row_events.append(ind)
        epsilons.append(row)
        events.append(row_events)
    worst = [max(row[j] for row in epsilons) if epsilons else 0.0 for j in range(len(deltas))]
    return UniformIntegrabilityReport(
        deltas=deltas,
        stopping_sups=stopping_sups,
        epsilons=epsilons,
        worst_epsilons=worst,
        events=events,
    )


def reevaluate(result: SupExpectationResult, claim, lattice: PathLattice) -> float:
    """Expectation of the claim under the result's own optimal kernel."""
    return TiltedMeasure(lattice, result.optimal_control).expectation(_leaf_values(claim))
