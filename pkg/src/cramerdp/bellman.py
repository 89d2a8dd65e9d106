"""CDF-level Bellman operators, the sup-Cramer field metric and the fixed-point driver.

The policy-evaluation update maps a return field to the law of
``R(s,a) + gamma * Z(s',a')`` entrywise, with the reward drawn jointly with
the successor state.  On the atomic backend this is computed exactly as the
finite enumeration ``{r_j + gamma * x_i}``; the equivalent pointwise CDF
form ``E[F(s',a')((x - r)/gamma)]`` is exposed separately as a cross-check.

The three primitive operators (reward translation, discount scaling,
conditional expectation) are also exported individually so that their
metric bounds can be certified one at a time: translation and conditional
expectation never expand the sup-Cramer metric, while discount scaling
contracts it by exactly sqrt(gamma).

Note the primitives do not compose to the evaluation update: translating
first and then scaling yields the law gamma * (Z + R), i.e. a discounted
reward, and entrywise translation draws the reward marginal independently
of the successor.  The law-level update above is the normative operator
here and is what `bellman_apply` implements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import (
    AtomicDistribution,
    GridCdf,
    atomic_from_arrays,
    cdf_values,
    cramer_distance,
    merge_atoms,
    point_mass,
    to_grid,
)
from .mdp import FiniteMdp, Policy, ReturnField, policy_kernel, reward_marginal

__all__ = [
    "GridSpec",
    "BellmanConfig",
    "IterationRecord",
    "EvaluationResult",
    "apply_reward_translation",
    "apply_discount_scale",
    "apply_conditional_expectation",
    "bellman_apply",
    "bellman_pointwise_cdf",
    "field_distance",
    "evaluate_policy",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid declaration for the grid backend."""

    x_min: float
    step: float
    n: int

    def __post_init__(self) -> None:
        if self.step <= 0 or self.n < 2:
            raise ValueError("grid spec needs step > 0 and n >= 2")

    @property
    def x_max(self) -> float:
        return self.x_min + self.step * (self.n - 1)


@dataclass(frozen=True)
class BellmanConfig:
    """Iteration controls: atom merging, backend choice and stopping rule."""

    merge_delta: float = 0.0
    backend: str = "atomic"
    grid: Optional[GridSpec] = None
    stop_tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self) -> None:
        if self.merge_delta < 0:
            raise ValueError("merge_delta must be nonnegative")
        if self.stop_tol <= 0:
            raise ValueError("stop_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.backend not in ("atomic", "grid"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if (self.backend == "grid") != (self.grid is not None):
            raise ValueError("a grid spec must be given exactly when backend='grid'")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    successive_distance: float
    banach_bound: float
    atom_count_max: int


@dataclass(frozen=True)
class EvaluationResult:
    """Fixed-point approximation plus its convergence trace."""

    field: ReturnField
    trace: tuple
    converged: bool
    iterations: int
    banach_bound: float


# ---------------------------------------------------------------------------
# primitive operators

def _mixture_atomic(dists, weights) -> AtomicDistribution:
    xs = np.concatenate([d.xs for d in dists])
    ws = np.concatenate([w * d.ws for d, w in zip(dists, weights)])
    return atomic_from_arrays(xs, ws)


def apply_reward_translation(field: ReturnField, mdp: FiniteMdp) -> ReturnField:
    """Entrywise law of Z(s,a) + R(s,a) with the reward drawn independently.

    The reward law used at (s, a) is the marginal over successors.  The
    output interval widens by the reward bound; it is the caller's job to
    keep the overall composition inside the declared return interval.
    """
    _check_shapes(field, mdp)
    lo, hi = field.interval
    # Grid carriers keep their declared range; mass pushed past the grid is
    # clamped by the interpolation reads (the inherent grid approximation).
    new_interval = (lo - mdp.r_max, hi + mdp.r_max) if field.backend == "atomic" else field.interval
    rows = []
    for s in range(mdp.n_states):
        row = []
        for a in range(mdp.n_actions):
            rew = reward_marginal(mdp, s, a)
            entry = field.entry(s, a)
            if isinstance(entry, AtomicDistribution):
                locs = (entry.xs[None, :] + rew.xs[:, None]).ravel()
                wts = (rew.ws[:, None] * entry.ws[None, :]).ravel()
                row.append(atomic_from_arrays(locs, wts))
            else:
                reads = entry.interp(entry.nodes[None, :] - rew.xs[:, None])
                values = rew.ws @ reads
                row.append(_repair_grid(entry, values))
        rows.append(tuple(row))
    return ReturnField(tuple(rows), new_interval)


def apply_discount_scale(field: ReturnField, gamma: float) -> ReturnField:
    """Pushforward of every entry under x -> gamma * x."""
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie strictly inside (0, 1), got {gamma!r}")
    lo, hi = field.interval
    new_interval = (gamma * lo, gamma * hi) if field.backend == "atomic" else field.interval
    rows = []
    for row in field.entries:
        out = []
        for entry in row:
            if isinstance(entry, AtomicDistribution):
                out.append(AtomicDistribution(gamma * entry.xs, entry.ws))
            else:
                values = entry.interp(entry.nodes / gamma)
                out.append(_repair_grid(entry, values))
        rows.append(tuple(out))
    return ReturnField(tuple(rows), new_interval)


def apply_conditional_expectation(field: ReturnField, kernel: np.ndarray) -> ReturnField:
    """Entrywise mixture of successor laws under the joint kernel.

    ``kernel[s, a, s', a']`` rows must be probability vectors; the output
    CDF at (s, a) is the pointwise convex combination of successor CDFs.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    expected = (field.n_states, field.n_actions, field.n_states, field.n_actions)
    if kernel.shape != expected:
        raise ValueError(f"kernel shape {kernel.shape} does not match field shape {expected}")
    sums = kernel.reshape(field.n_states, field.n_actions, -1).sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > 1e-12):
        raise ValueError("kernel rows must sum to 1")
    rows = []
    for s in range(field.n_states):
        row = []
        for a in range(field.n_actions):
            w = kernel[s, a]
            if field.backend == "atomic":
                picks = [(field.entry(s2, a2), w[s2, a2])
                         for s2 in range(field.n_states) for a2 in range(field.n_actions)
                         if w[s2, a2] > 0]
                row.append(_mixture_atomic([p[0] for p in picks], [p[1] for p in picks]))
            else:
                values = sum(
                    w[s2, a2] * field.entry(s2, a2).values
                    for s2 in range(field.n_states) for a2 in range(field.n_actions)
                    if w[s2, a2] > 0
                )
                g = field.entry(s, a)
                row.append(GridCdf(g.x_min, g.step, values))
        rows.append(tuple(row))
    return ReturnField(tuple(rows), field.interval)


# ---------------------------------------------------------------------------
# the evaluation operator

def _check_shapes(field: ReturnField, mdp: FiniteMdp) -> None:
    if field.n_states != mdp.n_states or field.n_actions != mdp.n_actions:
        raise ValueError("field shape does not match the MDP")


def _repair_grid(template: GridCdf, values: np.ndarray) -> GridCdf:
    # Interpolated reads can dip near jumps; restore monotonicity and range.
    values = np.clip(np.maximum.accumulate(values), 0.0, 1.0)
    values[-1] = 1.0
    return GridCdf(template.x_min, template.step, values)


def _state_mixtures(field: ReturnField, policy: Policy):
    """Per-state law of Z(s', A') with A' ~ pi(.|s'), shared by all (s, a)."""
    mixtures = []
    for s2 in range(field.n_states):
        probs = policy.probs[s2]
        picks = [(field.entry(s2, a2), probs[a2]) for a2 in range(field.n_actions) if probs[a2] > 0]
        if field.backend == "atomic":
            mixtures.append(_mixture_atomic([p[0] for p in picks], [p[1] for p in picks]))
        else:
            g = field.entry(s2, 0)
            mixtures.append(GridCdf(g.x_min, g.step, sum(w * d.values for d, w in picks)))
    return mixtures


def bellman_apply(field: ReturnField, mdp: FiniteMdp, policy: Policy,
                  config: BellmanConfig = BellmanConfig()) -> ReturnField:
    """One policy-evaluation update: entrywise law of R(s,a) + gamma * Z'.

    Atomic backend: exact enumeration of (next state, reward atom, successor
    atom) combinations, followed by exact-duplicate merging and, if
    configured, ``merge_atoms`` with the configured tolerance.  Grid
    backend: the pointwise CDF form with linear-interpolation reads.  The
    output must stay inside the declared return interval
    [-r_max/(1-gamma), r_max/(1-gamma)].
    """
    _check_shapes(field, mdp)
    if field.backend != config.backend:
        raise ValueError(f"field backend {field.backend!r} does not match config {config.backend!r}")
    gamma = mdp.gamma
    mixtures = _state_mixtures(field, policy)
    bound = mdp.return_bound
    lo, hi = field.interval

    rows = []
    if field.backend == "atomic":
        r_lo = min(d.support[0] for per_a in mdp.rewards for row in per_a for d in row)
        r_hi = max(d.support[1] for per_a in mdp.rewards for row in per_a for d in row)
        new_interval = (r_lo + gamma * lo, r_hi + gamma * hi)
        if new_interval[0] < -bound - 1e-9 or new_interval[1] > bound + 1e-9:
            raise ValueError(
                f"updated support {new_interval} exceeds the return bound [-{bound}, {bound}]"
            )
        for s in range(mdp.n_states):
            row = []
            for a in range(mdp.n_actions):
                locs, wts = [], []
                for s2 in range(mdp.n_states):
                    p = mdp.transition[s, a, s2]
                    if p == 0.0:
                        continue
                    rew = mdp.rewards[s][a][s2]
                    mix = mixtures[s2]
                    locs.append((rew.xs[:, None] + gamma * mix.xs[None, :]).ravel())
                    wts.append((p * rew.ws[:, None] * mix.ws[None, :]).ravel())
                d = atomic_from_arrays(np.concatenate(locs), np.concatenate(wts))
                if config.merge_delta > 0:
                    d = merge_atoms(d, config.merge_delta)
                row.append(d)
            rows.append(tuple(row))
        return ReturnField(tuple(rows), new_interval)

    nodes = field.entry(0, 0).nodes
    for s in range(mdp.n_states):
        row = []
        for a in range(mdp.n_actions):
            values = np.zeros(nodes.size)
            for s2 in range(mdp.n_states):
                p = mdp.transition[s, a, s2]
                if p == 0.0:
                    continue
                rew = mdp.rewards[s][a][s2]
                reads = mixtures[s2].interp((nodes[None, :] - rew.xs[:, None]) / gamma)
                values += p * (rew.ws @ reads)
            row.append(_repair_grid(field.entry(s, a), values))
        rows.append(tuple(row))
    return ReturnField(tuple(rows), field.interval)


def bellman_pointwise_cdf(field: ReturnField, mdp: FiniteMdp, policy: Policy,
                          s: int, a: int, x) -> np.ndarray:
    """Direct evaluation of the updated CDF, E[F(s',a')((x - r)/gamma)].

    Reads successor CDFs instead of building atoms, which makes it an
    independent cross-check of :func:`bellman_apply` on the atomic backend.
    """
    _check_shapes(field, mdp)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x)
    for s2 in range(mdp.n_states):
        p = mdp.transition[s, a, s2]
        if p == 0.0:
            continue
        rew = mdp.rewards[s][a][s2]
        for rj, qj in zip(rew.xs, rew.ws):
            args = (x - rj) / mdp.gamma
            for a2 in range(mdp.n_actions):
                pa = policy.probs[s2, a2]
                if pa == 0.0:
                    continue
                out += p * qj * pa * cdf_values(field.entry(s2, a2), args)
    return out


# ---------------------------------------------------------------------------
# metric and driver

def field_distance(f1: ReturnField, f2: ReturnField) -> float:
    """State-action supremum of entrywise Cramer distances."""
    if not f1.same_shape_as(f2):
        raise ValueError("fields have different shapes")
    return max(
        cramer_distance(f1.entry(s, a), f2.entry(s, a))
        for s in range(f1.n_states) for a in range(f1.n_actions)
    )


def _initial_field(mdp: FiniteMdp, config: BellmanConfig) -> ReturnField:
    interval = mdp.return_interval
    if config.backend == "atomic":
        return ReturnField.constant(point_mass(0.0), mdp.n_states, mdp.n_actions, interval)
    g = config.grid
    if g.x_min > interval[0] or g.x_max < interval[1] or not (g.x_min <= 0.0 <= g.x_max):
        raise ValueError("grid must cover the return interval and the origin")
    start = to_grid(point_mass(0.0), g.x_min, g.step, g.n)
    return ReturnField.constant(start, mdp.n_states, mdp.n_actions, interval)


def evaluate_policy(mdp: FiniteMdp, policy: Policy,
                    config: BellmanConfig = BellmanConfig(),
                    init_field: Optional[ReturnField] = None) -> EvaluationResult:
    """Iterate the evaluation operator to its unique fixed point.

    Stops once the a-posteriori Banach bound
    ``d(F_n, F_{n+1}) * sqrt(gamma) / (1 - sqrt(gamma))`` drops to
    ``config.stop_tol``; that bound dominates the true distance to the fixed
    point, so the returned ``banach_bound`` is a certified error.  If
    ``max_iter`` is exhausted first the best iterate is returned with
    ``converged=False``.
    """
    contraction = math.sqrt(mdp.gamma)
    amplification = contraction / (1.0 - contraction)
    current = init_field if init_field is not None else _initial_field(mdp, config)
    trace = []
    converged = False
    bound = math.inf
    for n in range(1, config.max_iter + 1):
        nxt = bellman_apply(current, mdp, policy, config)
        dist = field_distance(current, nxt)
        bound = dist * amplification
        trace.append(IterationRecord(n, dist, bound, nxt.max_atom_count()))
        current = nxt
        if bound <= config.stop_tol:
            converged = True
            break
    return EvaluationResult(current, tuple(trace), converged, len(trace), bound)
