"""Executable certification harness for the operator and geometry claims.

Every metric claim the library relies on (componentwise bounds, the
sqrt(gamma) contraction, the CDF-spectral isometry, the intertwining of the
update across representations, monotone recovery of the Cramer geometry and
fixed-point behaviour) is turned into a named, seeded check that reports
its worst observed slack against a pinned tolerance.  Checks are
reproducible bit for bit from their seed: all randomness flows through a
counter-based Philox generator.

Tolerances are split by computation class: exact-arithmetic checks at
1e-12, quadrature-limited checks at 1e-6, statistical checks at CLT scale
with pinned seeds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bellman import (
    BellmanConfig,
    apply_conditional_expectation,
    apply_discount_scale,
    apply_reward_translation,
    bellman_apply,
    bellman_pointwise_cdf,
    evaluate_policy,
    field_distance,
)
from .distributions import (
    AtomicDistribution,
    atomic_from_arrays,
    cdf_values,
    cramer_distance,
    point_mass,
)
from .mdp import (
    FiniteMdp,
    Policy,
    ReturnField,
    bias_horizon,
    classical_q_values,
    monte_carlo_returns,
    policy_kernel,
)
from .spectral import (
    EpsGeometry,
    QuadratureSpec,
    SignedExpSum,
    cdf_difference_jumps,
    centred_norm_quadrature,
    eps_sweep,
    h_eps_norm,
    induced_field_distance,
    lift_V,
    lift_V_inv,
    reg_distance,
    spectral_bellman_apply,
    spectral_bellman_direct,
    spectral_embed,
    transport_U,
    transport_U_inv,
)

__all__ = [
    "CheckReport",
    "random_atomic",
    "random_field",
    "random_field_pair",
    "random_mdp",
    "exact_dag_fixed_point",
    "check_contraction",
    "check_component_lemmas",
    "check_isometry_and_transport",
    "check_intertwining",
    "check_monotone_recovery",
    "check_fixed_point",
    "run_default_suite",
]

EXACT_TOL = 1e-12
RATIO_SLACK = 1e-9
QUADRATURE_TOL = 1e-6


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one named check; ``passed`` iff worst_slack <= tolerance."""

    check_name: str
    trials: int
    worst_slack: float
    tolerance: float
    passed: bool
    seed: int
    runtime: float

    def to_jsonable(self) -> dict:
        return {
            "check_name": self.check_name,
            "trials": self.trials,
            "worst_slack": self.worst_slack,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "seed": self.seed,
            "runtime": self.runtime,
        }


def _report(name: str, trials: int, worst: float, tol: float, seed: int, t0: float) -> CheckReport:
    return CheckReport(name, trials, float(worst), float(tol),
                       bool(worst <= tol), seed, time.perf_counter() - t0)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# seeded generators

def random_atomic(rng: np.random.Generator, lo: float, hi: float,
                  min_atoms: int = 2, max_atoms: int = 6) -> AtomicDistribution:
    """Random law: 2-6 atoms uniform in [lo, hi] with Dirichlet weights."""
    n = int(rng.integers(min_atoms, max_atoms + 1))
    xs = rng.uniform(lo, hi, size=n)
    ws = rng.dirichlet(np.ones(n))
    return atomic_from_arrays(xs, ws)


def random_field(rng: np.random.Generator, n_states: int, n_actions: int,
                 interval: tuple[float, float]) -> ReturnField:
    lo, hi = interval
    rows = tuple(
        tuple(random_atomic(rng, lo, hi) for _ in range(n_actions))
        for _ in range(n_states)
    )
    return ReturnField(rows, interval)


def random_field_pair(rng: np.random.Generator, n_states: int, n_actions: int,
                      interval: tuple[float, float]) -> tuple[ReturnField, ReturnField]:
    """Two random fields, resampled until they are metrically distinct."""
    while True:
        f1 = random_field(rng, n_states, n_actions, interval)
        f2 = random_field(rng, n_states, n_actions, interval)
        if field_distance(f1, f2) > 1e-8:
            return f1, f2


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int, gamma: float,
               r_max: float = 1.0, max_reward_atoms: int = 2) -> FiniteMdp:
    """Random dense MDP with Dirichlet transition rows and small reward laws."""
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    rewards = tuple(
        tuple(
            tuple(
                random_atomic(rng, -r_max, r_max, 1, max_reward_atoms)
                for _ in range(n_states)
            )
            for _ in range(n_actions)
        )
        for _ in range(n_states)
    )
    return FiniteMdp(transition, rewards, gamma, r_max)


def random_policy(rng: np.random.Generator, n_states: int, n_actions: int) -> Policy:
    return Policy(rng.dirichlet(np.ones(n_actions), size=n_states))


# ---------------------------------------------------------------------------
# exact fixed point for layered MDPs

def exact_dag_fixed_point(mdp: FiniteMdp, policy: Policy) -> ReturnField:
    """Exact return field for MDPs whose only cycles are trivial self-loops.

    Supported structure: every state either (a) transitions only to
    strictly later-resolvable states, or (b) is absorbing under all actions
    with one deterministic, action-independent reward, in which case its
    return law is the point mass r/(1-gamma).  Backward substitution then
    yields the fixed point with finitely many atoms and no iteration error.

    Raises ``ValueError`` for any other structure.
    """
    n_s, n_a = mdp.n_states, mdp.n_actions
    gamma = mdp.gamma
    laws: list[Optional[list[AtomicDistribution]]] = [None] * n_s
    mixtures: list[Optional[AtomicDistribution]] = [None] * n_s

    def absorbing_value(s: int) -> Optional[float]:
        r = None
        for a in range(n_a):
            if mdp.transition[s, a, s] != 1.0:
                return None
            d = mdp.rewards[s][a][s]
            if d.n_atoms != 1:
                return None
            r = d.xs[0] if r is None else r
            if d.xs[0] != r:
                return None
        return float(r) / (1.0 - gamma)

    remaining = set(range(n_s))
    progress = True
    while remaining and progress:
        progress = False
        for s in sorted(remaining):
            val = absorbing_value(s)
            if val is not None:
                laws[s] = [point_mass(val) for _ in range(n_a)]
            else:
                succ = {s2 for a in range(n_a) for s2 in range(n_s) if mdp.transition[s, a, s2] > 0}
                if s in succ or any(laws[s2] is None for s2 in succ):
                    continue
                per_action = []
                for a in range(n_a):
                    xs, ws = [], []
                    for s2 in range(n_s):
                        p = mdp.transition[s, a, s2]
                        if p == 0.0:
                            continue
                        rew = mdp.rewards[s][a][s2]
                        mix = mixtures[s2]
                        xs.append((rew.xs[:, None] + gamma * mix.xs[None, :]).ravel())
                        ws.append((p * rew.ws[:, None] * mix.ws[None, :]).ravel())
                    per_action.append(atomic_from_arrays(np.concatenate(xs), np.concatenate(ws)))
                laws[s] = per_action
            probs = policy.probs[s]
            mixtures[s] = atomic_from_arrays(
                np.concatenate([laws[s][a].xs for a in range(n_a) if probs[a] > 0]),
                np.concatenate([probs[a] * laws[s][a].ws for a in range(n_a) if probs[a] > 0]),
            )
            remaining.discard(s)
            progress = True
    if remaining:
        raise ValueError(f"MDP has nontrivial cycles through states {sorted(remaining)}")
    return ReturnField(tuple(tuple(row) for row in laws), mdp.return_interval)


def _fixed_point_reference(mdp: FiniteMdp, policy: Policy,
                           config: BellmanConfig) -> tuple[ReturnField, float]:
    """Reference fixed point and a certified bound on its own error."""
    try:
        return exact_dag_fixed_point(mdp, policy), 0.0
    except ValueError:
        deep = BellmanConfig(
            merge_delta=config.merge_delta, backend="atomic",
            stop_tol=max(config.stop_tol * 1e-3, 1e-13), max_iter=max(config.max_iter, 400),
        )
        res = evaluate_policy(mdp, policy, deep)
        return res.field, res.banach_bound


# ---------------------------------------------------------------------------
# named checks

def check_contraction(mdp: FiniteMdp, policy: Policy, trials: int, seed: int) -> CheckReport:
    """Worst one-step contraction ratio of the evaluation update vs sqrt(gamma)."""
    t0 = time.perf_counter()
    rng = _rng(seed)
    config = BellmanConfig(merge_delta=0.0)
    interval = mdp.return_interval
    worst = 0.0
    for _ in range(trials):
        f1, f2 = random_field_pair(rng, mdp.n_states, mdp.n_actions, interval)
        before = field_distance(f1, f2)
        after = field_distance(
            bellman_apply(f1, mdp, policy, config), bellman_apply(f2, mdp, policy, config)
        )
        worst = max(worst, after / before)
    tol = math.sqrt(mdp.gamma) + RATIO_SLACK
    return _report("contraction", trials, worst, tol, seed, t0)


def check_component_lemmas(mdp: FiniteMdp, policy: Policy, trials: int, seed: int) -> list[CheckReport]:
    """Componentwise bounds: translation and mixing never expand, scaling is exact."""
    t0 = time.perf_counter()
    rng = _rng(seed)
    kernel = policy_kernel(mdp, policy)
    interval = mdp.return_interval
    worst_s = 0.0
    worst_c = 0.0
    worst_d = 0.0
    root = math.sqrt(mdp.gamma)
    for _ in range(trials):
        f1, f2 = random_field_pair(rng, mdp.n_states, mdp.n_actions, interval)
        before = field_distance(f1, f2)
        ratio_s = field_distance(
            apply_reward_translation(f1, mdp), apply_reward_translation(f2, mdp)
        ) / before
        ratio_d = field_distance(
            apply_discount_scale(f1, mdp.gamma), apply_discount_scale(f2, mdp.gamma)
        ) / before
        ratio_c = field_distance(
            apply_conditional_expectation(f1, kernel), apply_conditional_expectation(f2, kernel)
        ) / before
        worst_s = max(worst_s, ratio_s)
        worst_c = max(worst_c, ratio_c)
        worst_d = max(worst_d, abs(ratio_d - root))
    reports = [
        _report("reward_translation_nonexpansive", trials, worst_s, 1.0 + EXACT_TOL, seed, t0),
        _report("discount_scaling_exact_ratio", trials, worst_d, EXACT_TOL, seed, t0),
        _report("conditional_expectation_nonexpansive", trials, worst_c, 1.0 + EXACT_TOL, seed, t0),
    ]
    return reports


def check_isometry_and_transport(trials: int, seed: int,
                                 quad: Optional[QuadratureSpec] = None) -> CheckReport:
    """Transport checks: norm preservation, exact round trip, term-exact identity."""
    t0 = time.perf_counter()
    rng = _rng(seed)
    quad = quad or QuadratureSpec()
    geom = EpsGeometry(1.0)
    worst = 0.0
    for _ in range(trials):
        p1 = random_atomic(rng, -1.0, 1.0)
        p2 = random_atomic(rng, -1.0, 1.0)
        h = cdf_difference_jumps(p1, p2)
        if h.is_zero:
            continue
        # item 1: norms computed on each side of the transport independently
        spectral_sq = h_eps_norm(transport_U(h), geom) ** 2
        cdf_sq = centred_norm_quadrature(h, geom, quad)
        scale = max(spectral_sq, cdf_sq, 1e-12)
        worst = max(worst, abs(spectral_sq - cdf_sq) / scale)
        # item 3: inverse round trip is exact on jump representations
        back = transport_U_inv(transport_U(h))
        if not (np.array_equal(back.xs, h.xs) and np.array_equal(back.cs, h.cs)):
            worst = math.inf
        # item 2: the transported difference is the difference of embeddings
        direct = spectral_embed(p1) - spectral_embed(p2)
        lifted = transport_U(h)
        if not (np.array_equal(direct.xs, lifted.xs) and np.array_equal(direct.cs, lifted.cs)):
            worst = math.inf
    return _report("cdf_spectral_isometry", trials, worst, QUADRATURE_TOL, seed, t0)


def check_intertwining(mdp: FiniteMdp, policy: Policy, trials: int, seed: int) -> CheckReport:
    """Representation-change commutation of the update, both CDF and spectral."""
    t0 = time.perf_counter()
    rng = _rng(seed)
    config = BellmanConfig(merge_delta=0.0)
    interval = mdp.return_interval
    worst = 0.0
    for _ in range(trials):
        f = random_field(rng, mdp.n_states, mdp.n_actions, interval)
        updated = bellman_apply(f, mdp, policy, config)
        xs = rng.uniform(interval[0] - 0.5, interval[1] + 0.5, size=64)
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                direct = bellman_pointwise_cdf(f, mdp, policy, s, a, xs)
                built = cdf_values(updated.entry(s, a), xs)
                worst = max(worst, float(np.max(np.abs(direct - built))))
        mu = lift_V(f)
        diagram_gap = induced_field_distance(
            spectral_bellman_apply(mu, mdp, policy, config),
            spectral_bellman_direct(mu, mdp, policy),
        )
        worst = max(worst, diagram_gap)
    return _report("intertwining", trials, worst, EXACT_TOL, seed, t0)


def check_monotone_recovery(pairs: Sequence[tuple[AtomicDistribution, AtomicDistribution]],
                            eps_list: Sequence[float], seed: int = 0) -> CheckReport:
    """Monotone approach of regularised distances to the Cramer distance.

    Asserts the sweep never decreases as eps drops, never exceeds the CDF
    value, and that the squared gap scales like sqrt(eps): quartering eps
    halves the gap within a factor 1.2 (checked over quartering pairs in
    the asymptotic tail of the schedule).
    """
    t0 = time.perf_counter()
    worst = 0.0
    trials = 0
    for (p1, p2) in pairs:
        trials += 1
        rows = eps_sweep(p1, p2, eps_list)
        target = rows[0].cdf_distance
        for earlier, later in zip(rows, rows[1:]):
            worst = max(worst, earlier.reg_distance - later.reg_distance)  # must not decrease
        for row in rows:
            worst = max(worst, row.reg_distance - target)
        if target <= 1e-9:
            continue
        # Gap scaling in the squared metric on quartering eps pairs.  The
        # sqrt(eps) law has prefactor (mean difference)^2, so the asymptote
        # is only visible for pairs with clearly distinct means and small eps.
        dmu = abs(p1.mean() - p2.mean())
        if dmu < 0.25:
            continue
        quarters = [e for e in eps_list if e <= 1e-3]
        sq_gap = {row.epsilon: target ** 2 - row.reg_distance ** 2 for row in rows}
        for e_big in quarters:
            e_small = e_big / 4.0
            match = [e for e in sq_gap if math.isclose(e, e_small, rel_tol=1e-9)]
            if not match or sq_gap[e_big] <= 1e-13:
                continue
            ratio = sq_gap[match[0]] / sq_gap[e_big]
            worst = max(worst, abs(ratio / 0.5 - 1.0) - 0.2)
    return _report("monotone_recovery", trials, worst, EXACT_TOL, seed, t0)


def check_fixed_point(mdp: FiniteMdp, policy: Policy, config: BellmanConfig,
                      seed: int = 0, rate_iterations: int = 25,
                      mc_samples: int = 200_000) -> CheckReport:
    """Fixed-point behaviour: rate bound, oracle agreement, spectral invariance.

    (a) the iterate error from the all-delta-zero start obeys
        d(F_n, F*) <= gamma^(n/2) d(F_0, F*) up to the reference error;
    (b) fixed-point means match the linear-solve Q-values to 1e-6;
    (c) each entry is within CLT range of a Monte Carlo empirical law;
    (d) the lifted fixed point is invariant under the spectral update.
    Slack is reported as the worst violation across all four clauses, each
    normalised by its own tolerance (so the check tolerance is 1).
    """
    t0 = time.perf_counter()
    reference, ref_err = _fixed_point_reference(mdp, policy, config)
    gamma = mdp.gamma
    worst = -1.0

    # (a) geometric rate along exact (merge-free) iterates
    exact_cfg = BellmanConfig(merge_delta=0.0)
    current = ReturnField.constant(point_mass(0.0), mdp.n_states, mdp.n_actions, mdp.return_interval)
    d0 = field_distance(current, reference)
    for n in range(1, rate_iterations + 1):
        current = bellman_apply(current, mdp, policy, exact_cfg)
        lhs = field_distance(current, reference)
        rhs = gamma ** (n / 2.0) * d0 + ref_err * (1.0 + gamma ** (n / 2.0)) + 1e-12
        worst = max(worst, (lhs - rhs) / max(rhs, 1e-12))
        if current.max_atom_count() > 200_000:
            break

    # (b) means against the classical linear solve
    q = classical_q_values(mdp, policy)
    mean_gap = max(
        abs(reference.entry(s, a).mean() - q[s, a])
        for s in range(mdp.n_states) for a in range(mdp.n_actions)
    )
    worst = max(worst, (mean_gap + ref_err) / 1e-6 - 1.0)

    # (c) Monte Carlo agreement at CLT scale
    width = mdp.return_interval[1] - mdp.return_interval[0]
    mc_tol = 3.0 * width / math.sqrt(mc_samples) + ref_err
    horizon = bias_horizon(mdp)
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            emp = monte_carlo_returns(mdp, policy, s, a, horizon, mc_samples, seed + s * 31 + a)
            gap = cramer_distance(reference.entry(s, a), emp)
            worst = max(worst, gap / mc_tol - 1.0)

    # (d) spectral invariance of the lifted fixed point
    mu = lift_V(reference)
    inv_gap = induced_field_distance(spectral_bellman_apply(mu, mdp, policy, exact_cfg), mu)
    worst = max(worst, (inv_gap - ref_err) / EXACT_TOL - 1.0)

    return _report("fixed_point", 1, worst, 0.0, seed, t0)


# ---------------------------------------------------------------------------
# default suite

def run_default_suite(seed: int = 20240601, trials: int = 200,
                      mdps: Optional[Sequence[tuple[str, FiniteMdp, Policy]]] = None) -> list[CheckReport]:
    """Run every check on the bundled models plus random instances."""
    from .io import load_bundled_mdp  # local import to avoid a cycle

    if mdps is None:
        single, single_pol = load_bundled_mdp("single_state")
        chain, chain_pol = load_bundled_mdp("chain3")
        mdps = [("single_state", single, single_pol), ("chain3", chain, chain_pol)]

    rng = _rng(seed)
    reports: list[CheckReport] = []
    for name, mdp, pol in mdps:
        reports.append(check_contraction(mdp, pol, trials, seed + 1))
        reports.extend(check_component_lemmas(mdp, pol, trials, seed + 2))
        reports.append(check_intertwining(mdp, pol, max(10, trials // 10), seed + 3))
        reports.append(check_fixed_point(mdp, pol, BellmanConfig(), seed + 4, mc_samples=100_000))
    gammas = (0.3, 0.81)
    for i, g in enumerate(gammas):
        mdp = random_mdp(rng, 2, 2, g)
        pol = random_policy(rng, 2, 2)
        reports.append(check_contraction(mdp, pol, trials, seed + 10 + i))
    reports.append(check_isometry_and_transport(max(10, trials // 10), seed + 20))
    pair_rng = _rng(seed + 21)
    pairs = [(point_mass(0.0), point_mass(1.0))] + [
        (random_atomic(pair_rng, -1, 1), random_atomic(pair_rng, -1, 1)) for _ in range(9)
    ]
    eps_list = sorted({e for base in (1.0, 1e-2, 1e-4) for e in (base, base / 4, base / 16)}, reverse=True)
    reports.append(check_monotone_recovery(pairs, eps_list, seed + 21))
    return reports
