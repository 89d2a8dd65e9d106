"""Finite MDPs, policies, return-distribution fields and classical oracles.

Rewards are per-(s, a, s') atomic laws; a deterministic reward is the
single-atom special case.  Two classical oracles live here for acceptance
testing: Q-values by direct linear solve and Monte Carlo return samples
from seeded counter-based (Philox) rollouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    AtomicDistribution,
    Distribution,
    GridCdf,
    atomic_from_arrays,
    from_samples,
    point_mass,
)

__all__ = [
    "FiniteMdp",
    "Policy",
    "ReturnField",
    "policy_kernel",
    "reward_marginal",
    "classical_q_values",
    "monte_carlo_returns",
    "bias_horizon",
]

ROW_TOL = 1e-12


def _check_stochastic_rows(table: np.ndarray, what: str) -> None:
    if np.any(table < 0):
        s = np.argwhere(table < 0)[0]
        raise ValueError(f"{what} has a negative entry at index {tuple(int(i) for i in s)}")
    sums = table.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise ValueError(f"{what} row {idx} sums to {float(sums[tuple(bad[0])])!r}, expected 1")


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """Finite MDP with transition table, per-(s,a,s') reward laws and discount.

    ``transition[s, a, s']`` is the next-state kernel; ``rewards[s][a][s']``
    is an :class:`AtomicDistribution` with support inside [-r_max, r_max];
    ``gamma`` lies strictly inside (0, 1).  Returns are then confined to
    [-r_max/(1-gamma), r_max/(1-gamma)].
    """

    transition: np.ndarray
    rewards: tuple
    gamma: float
    r_max: float

    def __post_init__(self) -> None:
        t = np.asarray(self.transition, dtype=np.float64)
        if t.ndim != 3 or t.shape[0] != t.shape[2] or t.shape[0] < 1 or t.shape[1] < 1:
            raise ValueError("transition table must have shape (S, A, S)")
        if not np.all(np.isfinite(t)):
            raise ValueError("non-finite transition probability")
        _check_stochastic_rows(t, "transition")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie strictly inside (0, 1), got {self.gamma!r}")
        if not (np.isfinite(self.r_max) and self.r_max >= 0):
            raise ValueError("r_max must be a finite nonnegative bound")
        n_s, n_a = t.shape[0], t.shape[1]
        rw = tuple(tuple(tuple(row) for row in per_a) for per_a in self.rewards)
        if len(rw) != n_s or any(len(per_a) != n_a for per_a in rw) or any(
            len(row) != n_s for per_a in rw for row in per_a
        ):
            raise ValueError("rewards must be indexed [s][a][s'] matching the transition shape")
        for s in range(n_s):
            for a in range(n_a):
                for s2 in range(n_s):
                    d = rw[s][a][s2]
                    if not isinstance(d, AtomicDistribution):
                        raise ValueError(f"reward ({s},{a},{s2}) is not an atomic law")
                    lo, hi = d.support
                    if lo < -self.r_max or hi > self.r_max:
                        raise ValueError(
                            f"reward ({s},{a},{s2}) support [{lo}, {hi}] exceeds |r| <= {self.r_max}"
                        )
        t.flags.writeable = False
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "rewards", rw)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def return_bound(self) -> float:
        return self.r_max / (1.0 - self.gamma)

    @property
    def return_interval(self) -> tuple[float, float]:
        b = self.return_bound
        return (-b, b)

    def reward_dist(self, s: int, a: int, s2: int) -> AtomicDistribution:
        return self.rewards[s][a][s2]


@dataclass(frozen=True, eq=False)
class Policy:
    """Stationary stochastic policy; ``probs[s, a]`` with rows summing to one."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("policy table must have shape (S, A)")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite policy probability")
        _check_stochastic_rows(p, "policy")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True, eq=False)
class ReturnField:
    """Table (s, a) -> distribution, the object Bellman operators act on.

    All entries share one backend (atomic or grid) and are supported inside
    the declared ``interval``.  Fields are immutable; operator code builds
    new fields rather than mutating entries, so per-entry updates can run in
    parallel between iterations.
    """

    entries: tuple
    interval: tuple[float, float]

    def __post_init__(self) -> None:
        ent = tuple(tuple(row) for row in self.entries)
        if len(ent) == 0 or len(ent[0]) == 0 or any(len(row) != len(ent[0]) for row in ent):
            raise ValueError("entries must form a nonempty rectangular (S, A) table")
        lo, hi = float(self.interval[0]), float(self.interval[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ValueError(f"bad support interval {self.interval!r}")
        kinds = {type(d) for row in ent for d in row}
        if not kinds <= {AtomicDistribution, GridCdf} or len(kinds) != 1:
            raise ValueError("entries must all be AtomicDistribution or all GridCdf")
        for s, row in enumerate(ent):
            for a, d in enumerate(row):
                if isinstance(d, AtomicDistribution):
                    dlo, dhi = d.support
                    if dlo < lo or dhi > hi:
                        raise ValueError(
                            f"entry ({s},{a}) support [{dlo}, {dhi}] outside interval [{lo}, {hi}]"
                        )
                else:
                    if d.x_min > lo or d.x_max < hi:
                        raise ValueError(
                            f"entry ({s},{a}) grid [{d.x_min}, {d.x_max}] does not cover [{lo}, {hi}]"
                        )
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "interval", (lo, hi))

    @classmethod
    def constant(cls, dist: Distribution, n_states: int, n_actions: int,
                 interval: tuple[float, float]) -> "ReturnField":
        return cls(tuple(tuple(dist for _ in range(n_actions)) for _ in range(n_states)), interval)

    @property
    def n_states(self) -> int:
        return len(self.entries)

    @property
    def n_actions(self) -> int:
        return len(self.entries[0])

    @property
    def backend(self) -> str:
        return "atomic" if isinstance(self.entries[0][0], AtomicDistribution) else "grid"

    def entry(self, s: int, a: int) -> Distribution:
        return self.entries[s][a]

    def max_atom_count(self) -> int:
        if self.backend == "grid":
            return self.entries[0][0].n_nodes
        return max(d.n_atoms for row in self.entries for d in row)

    def same_shape_as(self, other: "ReturnField") -> bool:
        return self.n_states == other.n_states and self.n_actions == other.n_actions


# ---------------------------------------------------------------------------
# kernels and classical oracles

def policy_kernel(mdp: FiniteMdp, policy: Policy) -> np.ndarray:
    """Joint successor kernel K[s, a, s', a'] = P(s'|s,a) * pi(a'|s')."""
    if policy.n_states != mdp.n_states or policy.n_actions != mdp.n_actions:
        raise ValueError("policy shape does not match the MDP")
    return np.einsum("sap,pb->sapb", mdp.transition, policy.probs)


def reward_marginal(mdp: FiniteMdp, s: int, a: int) -> AtomicDistribution:
    """Law of the one-step reward R(s, a), mixing over the next state."""
    if not (0 <= s < mdp.n_states and 0 <= a < mdp.n_actions):
        raise ValueError(f"state-action index ({s},{a}) out of range")
    xs, ws = [], []
    for s2 in range(mdp.n_states):
        p = mdp.transition[s, a, s2]
        if p == 0.0:
            continue
        d = mdp.rewards[s][a][s2]
        xs.append(d.xs)
        ws.append(p * d.ws)
    return atomic_from_arrays(np.concatenate(xs), np.concatenate(ws))


def classical_q_values(mdp: FiniteMdp, policy: Policy) -> np.ndarray:
    """Mean-return table Q(s, a) from the linear Bellman system.

    Solves Q = rbar + gamma * K Q directly; with gamma < 1 the system matrix
    is strictly diagonally dominant, so a failing solve signals numerical
    breakdown rather than genuine singularity.
    """
    n = mdp.n_states * mdp.n_actions
    kernel = policy_kernel(mdp, policy).reshape(n, n)
    rbar = np.array(
        [reward_marginal(mdp, s, a).mean() for s in range(mdp.n_states) for a in range(mdp.n_actions)]
    )
    try:
        q = np.linalg.solve(np.eye(n) - mdp.gamma * kernel, rbar)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cannot happen for gamma < 1
        raise ValueError(f"Bellman linear system unexpectedly singular: {exc}") from exc
    return q.reshape(mdp.n_states, mdp.n_actions)


def bias_horizon(mdp: FiniteMdp, bias: float = 1e-9) -> int:
    """Smallest horizon with geometric tail gamma^T * r_max / (1-gamma) <= bias."""
    if mdp.r_max == 0:
        return 1
    tail0 = mdp.r_max / (1.0 - mdp.gamma)
    if tail0 <= bias:
        return 1
    return int(math.ceil(math.log(bias / tail0) / math.log(mdp.gamma)))


def _sample_rows(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # index of the first cumulative weight strictly above u; u in [0, 1)
    return np.sum(cum_rows <= u[:, None], axis=1)


def monte_carlo_returns(
    mdp: FiniteMdp,
    policy: Policy,
    s: int,
    a: int,
    horizon: int,
    n_samples: int,
    seed: int,
) -> AtomicDistribution:
    """Empirical law of the horizon-truncated discounted return from (s, a).

    The first action is ``a``; afterwards actions follow the policy.  All
    sampling uses one counter-based Philox stream keyed by ``seed``, with
    samples advanced in lock step, so the output is a pure function of
    (mdp, policy, s, a, horizon, n_samples, seed).
    """
    if not (0 <= s < mdp.n_states and 0 <= a < mdp.n_actions):
        raise ValueError(f"state-action index ({s},{a}) out of range")
    if horizon < 1 or n_samples < 1:
        raise ValueError("horizon and n_samples must be positive")
    rng = np.random.Generator(np.random.Philox(seed))

    trans_cum = np.cumsum(mdp.transition, axis=2)
    pol_cum = np.cumsum(policy.probs, axis=1)
    reward_tbl = [
        [[(d.xs, d.cum_weights) for d in row] for row in per_a] for per_a in mdp.rewards
    ]

    states = np.full(n_samples, s, dtype=np.intp)
    actions = np.full(n_samples, a, dtype=np.intp)
    totals = np.zeros(n_samples)
    disc = 1.0
    for _ in range(horizon):
        u_next = rng.random(n_samples)
        nxt = _sample_rows(trans_cum[states, actions], u_next)
        u_rew = rng.random(n_samples)
        rewards = np.empty(n_samples)
        for ss in range(mdp.n_states):
            for aa in range(mdp.n_actions):
                for s2 in range(mdp.n_states):
                    mask = (states == ss) & (actions == aa) & (nxt == s2)
                    if not mask.any():
                        continue
                    xs, cumw = reward_tbl[ss][aa][s2]
                    if xs.size == 1:
                        rewards[mask] = xs[0]
                    else:
                        rewards[mask] = xs[np.searchsorted(cumw, u_rew[mask], side="right")]
        totals += disc * rewards
        disc *= mdp.gamma
        u_act = rng.random(n_samples)
        actions = _sample_rows(pol_cum[nxt], u_act)
        states = nxt
    return from_samples(totals)
