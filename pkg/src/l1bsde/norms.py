"""Process norms under the sup-over-kernel expectation.

``d_norm`` is the double supremum, over adapted stopping rules and kernels, of
the expected absolute value at stopping.  ``s_beta_norm`` raises the running
supremum of the magnitude to a power ``beta`` in (0, 1) before taking the
sup-expectation; ``h_beta_norm`` does the same with the quadratic-variation
integral of a predictable-increment process.  Stopping rules are adapted
stop/continue node maps, which is the full discrete class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import DriftControl, PathLattice, TiltedMeasure, constant_control
from .nonlinexp import optimal_stopping_sup_expectation, sup_expectation


@dataclass
class NodeProcess:
    """Node-indexed process: one array per slice.

    ``adapted`` processes carry ``steps + 1`` slices; ``increment`` (predictable
    one-step) processes carry ``steps`` slices, read at the left endpoint.
    """

    values: list[np.ndarray]
    kind: str = "adapted"

    def __post_init__(self):
        if self.kind not in ("adapted", "increment"):
            raise ValueError("kind must be 'adapted' or 'increment'")
        self.values = [np.asarray(v, dtype=float) for v in self.values]
        for t, arr in enumerate(self.values):
            if arr.shape != (2**t,):
                raise ValueError(f"slice {t} must have length {2**t}")

    @property
    def steps(self) -> int:
        return len(self.values) - (1 if self.kind == "adapted" else 0)


def constant_process(value: float, lattice: PathLattice) -> NodeProcess:
    return NodeProcess(values=[np.full(2**t, float(value)) for t in range(lattice.steps + 1)])


def _require_adapted(process: NodeProcess, lattice: PathLattice):
    if process.kind != "adapted" or len(process.values) != lattice.steps + 1:
        raise ValueError("expected an adapted process on this lattice")


def running_abs_max_leaves(process: NodeProcess) -> np.ndarray:
    """Pathwise maximum of the magnitude, one value per leaf (exact on a full tree)."""
    running = np.abs(process.values[0])
    for arr in process.values[1:]:
        running = np.maximum(np.repeat(running, 2), np.abs(arr))
    return running


def d_norm(process: NodeProcess, L: float, lattice: PathLattice) -> float:
    """sup over stopping rules and kernels of the expected stopped magnitude."""
    _require_adapted(process, lattice)
    payoff = [np.abs(v) for v in process.values]
    return float(optimal_stopping_sup_expectation(payoff, L, lattice)[0][0])


def s_beta_norm(process: NodeProcess, beta: float, L: float, lattice: PathLattice) -> float:
    """Sup-expectation of (running sup of |Y|)**beta, beta in (0, 1)."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    _require_adapted(process, lattice)
    return sup_expectation(running_abs_max_leaves(process) ** beta, L, lattice).value


def h_beta_norm(
    z_process: NodeProcess, beta: float, L: float, lattice: PathLattice, sigma_slices=None
) -> float:
    """Sup-expectation of the quadratic-variation integral raised to beta/2.

    The integrand uses left-endpoint (predictable) values times dt; the
    volatility defaults to the lattice regime.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if z_process.kind != "increment" or len(z_process.values) != lattice.steps:
        raise ValueError("expected a predictable-increment process on this lattice")
    sigma = lattice.sigma if sigma_slices is None else sigma_slices
    dt = lattice.grid.dt
    acc = np.zeros(1)
    for t in range(lattice.steps):
        term = (sigma[t] * z_process.values[t]) ** 2 * dt
        acc = np.repeat(acc + term, 2)
    return sup_expectation(acc ** (beta / 2.0), L, lattice).value


@dataclass
class NormReport:
    d_norm: float
    s_beta: float
    h_beta: float
    beta: float


def norm_report(
    process: NodeProcess, z_process: NodeProcess | None, beta: float, L: float, lattice: PathLattice
) -> NormReport:
    hb = 0.0 if z_process is None else h_beta_norm(z_process, beta, L, lattice)
    return NormReport(
        d_norm=d_norm(process, L, lattice),
        s_beta=s_beta_norm(process, beta, L, lattice),
        h_beta=hb,
        beta=beta,
    )


@dataclass
class DoobReport:
    applicable: bool
    s_beta: float
    bound: float
    slack: float
    witness: DriftControl | None


def find_submartingale_witness(
    process: NodeProcess, L: float, lattice: PathLattice, tol: float = 1e-12
) -> DriftControl | None:
    """Adapted kernel under which the process is a submartingale, if one exists.

    Per node the best tilted one-step mean is affine-maximal at the kernel
    bound; if even that fails to dominate the current value, no kernel works.
    """
    _require_adapted(process, lattice)
    sq = lattice.grid.sqrt_dt
    lam = []
    for t in range(lattice.steps):
        nxt = process.values[t + 1]
        up, dn = nxt[0::2], nxt[1::2]
        spread = 0.5 * (up - dn)
        best = 0.5 * (up + dn) + L * sq * np.abs(spread)
        if np.any(best < process.values[t] - tol):
            return None
        lam.append(np.where(spread >= 0.0, L, -L))
    return DriftControl(lam=lam, bound=L)


def doob_inequality_check(
    process: NodeProcess, beta: float, L: float, lattice: PathLattice
) -> DoobReport:
    """Running-sup moment bound for a nonnegative kernel-submartingale.

    Checks ``s_beta_norm(M) <= sup-expectation(M_T)**beta / (1 - beta)``.  If
    the process is not nonnegative or no witness kernel makes it a
    submartingale, the check is inapplicable rather than failed.
    """
    _require_adapted(process, lattice)
    if any(np.any(v < 0) for v in process.values):
        return DoobReport(False, 0.0, 0.0, 0.0, None)
    witness = find_submartingale_witness(process, L, lattice)
    if witness is None:
        return DoobReport(False, 0.0, 0.0, 0.0, None)
    sb = s_beta_norm(process, beta, L, lattice)
    terminal = sup_expectation(process.values[-1], L, lattice).value
    bound = terminal**beta / (1.0 - beta)
    return DoobReport(True, sb, bound, bound - sb, witness)


def snell_value_under(measure: TiltedMeasure, payoff_slices) -> float:
    """Optimal-stopping value of a payoff process under one fixed measure."""
    lattice = measure.lattice
    v = np.asarray(payoff_slices[lattice.steps], dtype=float).copy()
    for t in range(lattice.steps - 1, -1, -1):
        p = measure.up_probs[t]
        cont = p * v[0::2] + (1.0 - p) * v[1::2]
        v = np.maximum(np.asarray(payoff_slices[t], dtype=float), cont)
    return float(v[0])


@dataclass
class RunningSupReport:
    worst_slack: float
    slacks: list[float]


def running_sup_bound_check(
    process: NodeProcess, beta: float, L: float, lattice: PathLattice, controls=None
) -> RunningSupReport:
    """Per fixed measure: E[(max X)**beta] <= (sup over stops E[X_tau])**beta / (1-beta).

    ``X`` must be nonnegative.  The measure test set defaults to the untilted
    measure and constant kernels at the bound and half of it.
    """
    _require_adapted(process, lattice)
    if any(np.any(v < 0) for v in process.values):
        raise ValueError("running-sup bound check needs a nonnegative process")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if controls is None:
        levels = [0.0, L, -L, L / 2.0, -L / 2.0] if L > 0 else [0.0]
        controls = [constant_control(lattice, lv, bound=abs(L)) for lv in levels]
    max_leaves = running_abs_max_leaves(process) ** beta
    slacks = []
    for control in controls:
        measure = TiltedMeasure(lattice, control)
        lhs = measure.expectation(max_leaves)
        rhs = snell_value_under(measure, process.values) ** beta / (1.0 - beta)
        slacks.append(rhs - lhs)
    return RunningSupReport(worst_slack=min(slacks), slacks=slacks)
