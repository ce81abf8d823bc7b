"""Discrete path space: a full (non-recombining) binary tree of noise increments.

Slice ``t`` holds ``2**t`` nodes indexed ``0 .. 2**t - 1``; node ``(t, i)`` has
children ``(t+1, 2*i)`` (up move, driving noise ``+sqrt(dt)``) and
``(t+1, 2*i+1)`` (down move).  The observable process ``b`` moves by
``+/- sigma(node) * sqrt(dt)`` where ``sigma`` is a per-node volatility
assignment.  Drift kernels bounded by ``L`` act by re-weighting the up
probability to ``(1 + lam*sqrt(dt)) / 2``, which keeps the expected change of
measure density exactly 1 on the tree.

The tree is deliberately non-recombining: running suprema and other path
functionals are path-dependent, so every leaf must remember its full history.
Volatility is an assigned node function here (adapted by construction); there
is no pathwise-density limit to take at desk scale.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

DEFAULT_DEPTH_CAP = 22
SIGMA_FLOOR = 1e-9


class CapExceededError(ValueError):
    """Raised when a requested tree exceeds the configured depth cap."""


def depth_cap() -> int:
    """Active depth cap; ``L1BSDE_DEPTH_CAP`` overrides (testing only)."""
    raw = os.environ.get("L1BSDE_DEPTH_CAP")
    return int(raw) if raw else DEFAULT_DEPTH_CAP


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with ``steps`` intervals on ``[0, horizon]``."""

    horizon: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1 (degenerate grids are rejected)")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def sqrt_dt(self) -> float:
        return self.dt ** 0.5

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass(frozen=True)
class VolatilityRegime:
    """Per-node volatility assignment; ``values[t]`` covers slice ``t < steps``."""

    values: list[np.ndarray]
    label: str = "regime"

    def sigma(self, t: int) -> np.ndarray:
        return self.values[t]


class PathLattice:
    """Immutable full binary tree carrying noise, volatility and observable paths.

    Attributes
    ----------
    grid : TimeGrid
    sigma : list of arrays, slice ``t`` (length ``2**t``) for ``t < steps``
    b : list of arrays, the observable process per slice, ``b[0] = [0.0]``
    w : list of arrays, the driving noise (unit-volatility) per slice
    """

    def __init__(self, grid: TimeGrid, sigma_slices: list[np.ndarray], label: str = "regime"):
        n = grid.steps
        if n > depth_cap():
            raise CapExceededError(f"steps={n} exceeds depth cap {depth_cap()}")
        if len(sigma_slices) != n:
            raise ValueError("need one sigma slice per step")
        sq = grid.sqrt_dt
        sigma = []
        b = [np.zeros(1)]
        w = [np.zeros(1)]
        for t in range(n):
            sg = np.asarray(sigma_slices[t], dtype=float)
            if sg.shape != (2**t,):
                raise ValueError(f"sigma slice {t} must have length {2**t}")
            if np.any(sg < SIGMA_FLOOR):
                raise ValueError(f"sigma must be >= {SIGMA_FLOOR} everywhere")
            sigma.append(sg)
            bn = np.empty(2 ** (t + 1))
            bn[0::2] = b[t] + sg * sq
            bn[1::2] = b[t] - sg * sq
            b.append(bn)
            wn = np.empty(2 ** (t + 1))
            wn[0::2] = w[t] + sq
            wn[1::2] = w[t] - sq
            w.append(wn)
        self.grid = grid
        self.regime = VolatilityRegime(values=sigma, label=label)
        self.sigma = sigma
        self.b = b
        self.w = w

    @property
    def steps(self) -> int:
        return self.grid.steps

    @property
    def n_leaves(self) -> int:
        return 2**self.grid.steps

    def n_nodes(self) -> int:
        return 2 ** (self.grid.steps + 1) - 1

    def leaf_b(self) -> np.ndarray:
        return self.b[-1]

    def uniform_leaf_probabilities(self) -> np.ndarray:
        return np.full(self.n_leaves, 0.5**self.steps)


def build_lattice(grid: TimeGrid, regime=1.0, label: str = "regime") -> PathLattice:
    """Build the tree for a volatility regime.

    ``regime`` is a positive constant, a callable ``(t, b_slice) -> sigma_slice``
    evaluated forward slice by slice, or an explicit list of per-slice arrays.
    Construction is deterministic; no randomness enters here.
    """
    n = grid.steps
    if isinstance(regime, VolatilityRegime):
        return PathLattice(grid, regime.values, label=regime.label)
    if isinstance(regime, (int, float)):
        slices = [np.full(2**t, float(regime)) for t in range(n)]
        return PathLattice(grid, slices, label=label)
    if callable(regime):
        # forward construction: sigma at slice t may only read the path up to t
        sq = grid.sqrt_dt
        b = np.zeros(1)
        slices = []
        for t in range(n):
            sg = np.broadcast_to(np.asarray(regime(t, b), dtype=float), (2**t,)).copy()
            slices.append(sg)
            bn = np.empty(2 ** (t + 1))
            bn[0::2] = b + sg * sq
            bn[1::2] = b - sg * sq
            b = bn
        return PathLattice(grid, slices, label=label)
    return PathLattice(grid, [np.asarray(s, dtype=float) for s in regime], label=label)


@dataclass(frozen=True)
class DriftControl:
    """Adapted drift kernel ``lam`` with ``|lam| <= bound`` per node."""

    lam: list[np.ndarray]
    bound: float

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("kernel bound must be nonnegative")
        for t, arr in enumerate(self.lam):
            if np.any(np.abs(arr) > self.bound + 1e-15):
                raise ValueError(f"kernel exceeds bound {self.bound} at slice {t}")


def constant_control(lattice: PathLattice, value: float, bound: float | None = None) -> DriftControl:
    lam = [np.full(2**t, float(value)) for t in range(lattice.steps)]
    return DriftControl(lam=lam, bound=abs(value) if bound is None else bound)


def paste_controls(first: DriftControl, second: DriftControl, k: int) -> DriftControl:
    """Kernel equal to ``first`` before step ``k`` and ``second`` from step ``k`` on."""
    lam = [first.lam[t] if t < k else second.lam[t] for t in range(len(first.lam))]
    return DriftControl(lam=lam, bound=max(first.bound, second.bound))


class TiltedMeasure:
    """Measure induced by a drift kernel: up probability ``(1 + lam*sqrt(dt))/2``."""

    def __init__(self, lattice: PathLattice, control: DriftControl):
        sq = lattice.grid.sqrt_dt
        if control.bound * sq >= 1.0:
            raise ValueError(
                f"infeasible kernel: bound*sqrt(dt) = {control.bound * sq:.3g} >= 1"
            )
        self.lattice = lattice
        self.control = control
        self.up_probs = [(1.0 + control.lam[t] * sq) / 2.0 for t in range(lattice.steps)]

    def expectation(self, leaf_values: np.ndarray) -> float:
        """Backward one-step averaging; exact telescoping of the tilted law."""
        v = np.asarray(leaf_values, dtype=float)
        for t in range(self.lattice.steps - 1, -1, -1):
            p = self.up_probs[t]
            v = p * v[0::2] + (1.0 - p) * v[1::2]
        return float(v[0])

    def conditional_expectation(self, leaf_values: np.ndarray, t: int) -> np.ndarray:
        """Slice-``t`` conditional expectation of a terminal payoff."""
        v = np.asarray(leaf_values, dtype=float)
        for s in range(self.lattice.steps - 1, t - 1, -1):
            p = self.up_probs[s]
            v = p * v[0::2] + (1.0 - p) * v[1::2]
        return v

    def leaf_density(self) -> np.ndarray:
        """Change-of-measure density versus the uniform tree measure, per leaf."""
        sq = self.lattice.grid.sqrt_dt
        d = np.ones(1)
        for t in range(self.lattice.steps):
            step = self.control.lam[t] * sq
            nxt = np.empty(2 ** (t + 1))
            nxt[0::2] = d * (1.0 + step)
            nxt[1::2] = d * (1.0 - step)
            d = nxt
        return d

    def leaf_probabilities(self) -> np.ndarray:
        return self.leaf_density() * self.lattice.uniform_leaf_probabilities()


def tilt(lattice: PathLattice, control: DriftControl) -> TiltedMeasure:
    """Attach a drift kernel to the tree as an equivalent tilted measure."""
    return TiltedMeasure(lattice, control)


@dataclass
class TerminalClaim:
    """Leaf-indexed terminal payoff."""

    values: np.ndarray
    lattice: PathLattice
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.lattice.n_leaves,):
            raise ValueError("claim values must be leaf-indexed")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("claim values must be finite")


def pareto_from_rank(abs_terminal: np.ndarray, masses: np.ndarray, alpha: float, scale: float) -> np.ndarray:
    """Heavy-tailed transform: map the rank of ``|b_T|`` to a Pareto(alpha) quantile.

    Each leaf gets ``scale * (1 - u)**(-1/alpha)`` where ``u`` is the leaf's
    mid-rank under the given leaf masses.  For ``alpha`` in (1, 2) the limit law
    has a finite mean but infinite variance, which is exactly the tail behaviour
    the truncation experiments need.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    order = np.argsort(abs_terminal, kind="stable")
    sorted_vals = abs_terminal[order]
    sorted_mass = masses[order]
    cum = np.concatenate([[0.0], np.cumsum(sorted_mass)])
    # mid-rank within tie groups keeps u strictly inside (0, 1)
    u_sorted = np.empty_like(sorted_vals)
    i = 0
    m = len(sorted_vals)
    while i < m:
        j = i
        while j + 1 < m and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        u_sorted[i : j + 1] = 0.5 * (cum[i] + cum[j + 1])
        i = j + 1
    u = np.empty_like(u_sorted)
    u[order] = u_sorted
    return scale * (1.0 - u) ** (-1.0 / alpha)


def claim_values_generic(spec, b_slices, w_terminal, leaf_masses, branching: int = 2) -> np.ndarray:
    """Kind dispatch shared by the binary tree and the regime-labelled joint tree."""
    kind = spec.get("kind")
    bT = b_slices[-1]
    if kind == "identity":
        return bT.copy()
    if kind == "noise":
        return np.asarray(w_terminal, dtype=float).copy()
    if kind == "constant":
        return np.full(len(bT), float(spec["value"]))
    if kind == "call":
        return np.maximum(bT - float(spec["strike"]), 0.0)
    if kind == "put":
        return np.maximum(float(spec["strike"]) - bT, 0.0)
    if kind == "abs":
        return np.abs(bT)
    if kind == "square":
        return bT**2
    if kind in ("pathmax", "pathabsmax"):
        running = b_slices[0] if kind == "pathmax" else np.abs(b_slices[0])
        for t in range(1, len(b_slices)):
            cur = b_slices[t] if kind == "pathmax" else np.abs(b_slices[t])
            running = np.maximum(np.repeat(running, branching), cur)
        return running
    if kind == "pareto":
        return pareto_from_rank(
            np.abs(bT), leaf_masses, float(spec.get("alpha", 1.5)), float(spec.get("scale", 1.0))
        )
    if kind == "terminal":
        return np.asarray(spec["fn"](bT), dtype=float)
    raise ValueError(f"unknown claim spec kind: {kind!r}")


def claim_from_spec(lattice: PathLattice, spec) -> TerminalClaim:
    """Materialise a claim spec on a lattice.

    Supported kinds: ``identity`` (terminal b), ``noise`` (terminal driving
    noise), ``constant``, ``call``/``put`` (strike), ``abs``, ``square``,
    ``pathmax``/``pathabsmax`` (running extrema of b), ``pareto`` (alpha,
    scale; heavy-tail transform of ``|b_T|``), and ``terminal`` with an
    explicit ``fn(b_T) -> values``.
    """
    if callable(spec):
        return TerminalClaim(values=spec(lattice.leaf_b()), lattice=lattice, spec={"kind": "terminal"})
    values = claim_values_generic(
        spec, lattice.b, lattice.w[-1], lattice.uniform_leaf_probabilities(), branching=2
    )
    return TerminalClaim(values=values, lattice=lattice, spec=dict(spec))
