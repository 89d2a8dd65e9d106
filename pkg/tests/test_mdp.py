import math

import numpy as np
import pytest

from cramerdp.distributions import make_atomic, point_mass, two_point
from cramerdp.mdp import (
    FiniteMdp,
    Policy,
    ReturnField,
    bias_horizon,
    classical_q_values,
    monte_carlo_returns,
    policy_kernel,
    reward_marginal,
)
from cramerdp.verify import random_mdp, random_policy


def _const_reward(dist, n_s, n_a):
    return tuple(tuple(tuple(dist for _ in range(n_s)) for _ in range(n_a)) for _ in range(n_s))


def single_state_mdp(r=1.0, gamma=0.5):
    return FiniteMdp(np.ones((1, 1, 1)), _const_reward(point_mass(r), 1, 1), gamma, abs(r))


def two_state_chain():
    # state 0 -> state 1 (Bernoulli reward), state 1 absorbing (reward 1)
    transition = np.zeros((2, 1, 2))
    transition[0, 0, 1] = 1.0
    transition[1, 0, 1] = 1.0
    bern = two_point(0.0, 1.0, 0.5)
    rewards = (
        ((point_mass(0.0), bern),),
        ((point_mass(0.0), point_mass(1.0)),),
    )
    return FiniteMdp(transition, rewards, 0.5, 1.0)


# ---------------------------------------------------------------------------
# validation

def test_transition_rows_must_sum_to_one():
    t = np.ones((1, 1, 1)) * 0.9
    with pytest.raises(ValueError, match=r"row \(0, 0\)"):
        FiniteMdp(t, _const_reward(point_mass(0.0), 1, 1), 0.5, 1.0)


def test_reward_support_bound_enforced():
    with pytest.raises(ValueError, match=r"reward \(0,0,0\)"):
        FiniteMdp(np.ones((1, 1, 1)), _const_reward(point_mass(2.0), 1, 1), 0.5, 1.0)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.2, 1.5])
def test_gamma_strictly_inside_unit_interval(gamma):
    with pytest.raises(ValueError):
        FiniteMdp(np.ones((1, 1, 1)), _const_reward(point_mass(0.0), 1, 1), gamma, 1.0)


def test_policy_rows_validated():
    with pytest.raises(ValueError):
        Policy(np.array([[0.5, 0.4]]))
    with pytest.raises(ValueError):
        Policy(np.array([[1.2, -0.2]]))


def test_return_field_interval_enforced():
    with pytest.raises(ValueError, match=r"entry \(0,0\)"):
        ReturnField(((point_mass(5.0),),), (-1.0, 1.0))


def test_return_field_rejects_mixed_backends():
    from cramerdp.distributions import to_grid

    g = to_grid(point_mass(0.0), -1.0, 1.0, 3)
    with pytest.raises(ValueError):
        ReturnField(((point_mass(0.0), g),), (-1.0, 1.0))


# ---------------------------------------------------------------------------
# kernel and marginals

def test_policy_kernel_single_state():
    mdp = single_state_mdp()
    k = policy_kernel(mdp, Policy.uniform(1, 1))
    assert k.shape == (1, 1, 1, 1) and k[0, 0, 0, 0] == 1.0


def test_policy_kernel_deterministic_transition_uniform_policy():
    transition = np.zeros((2, 2, 2))
    transition[:, :, 1] = 1.0  # everything moves to state 1
    rewards = _const_reward(point_mass(0.0), 2, 2)
    mdp = FiniteMdp(transition, rewards, 0.5, 1.0)
    k = policy_kernel(mdp, Policy.uniform(2, 2))
    assert np.allclose(k[0, 0, 1], [0.5, 0.5]) and np.all(k[0, 0, 0] == 0.0)


def test_policy_kernel_rows_are_probability_vectors(rng):
    for _ in range(25):
        mdp = random_mdp(rng, 3, 2, 0.7)
        pol = random_policy(rng, 3, 2)
        rows = policy_kernel(mdp, pol).reshape(6, 6).sum(axis=1)
        assert np.max(np.abs(rows - 1.0)) <= 1e-12


def test_reward_marginal_deterministic():
    assert reward_marginal(single_state_mdp(), 0, 0).atoms == [(1.0, 1.0)]


def test_reward_marginal_mixture():
    transition = np.array([[[0.5, 0.5]], [[0.0, 1.0]]])
    rewards = (
        ((point_mass(0.0), point_mass(1.0)),),
        ((point_mass(0.0), point_mass(0.0)),),
    )
    mdp = FiniteMdp(transition, rewards, 0.5, 1.0)
    assert reward_marginal(mdp, 0, 0).atoms == [(0.0, 0.5), (1.0, 0.5)]


def test_reward_marginal_mass(rng):
    for _ in range(25):
        mdp = random_mdp(rng, 3, 2, 0.7)
        for s in range(3):
            for a in range(2):
                assert abs(reward_marginal(mdp, s, a).ws.sum() - 1.0) <= 1e-12


def test_reward_marginal_index_check():
    with pytest.raises(ValueError):
        reward_marginal(single_state_mdp(), 1, 0)


# ---------------------------------------------------------------------------
# classical Q oracle

def test_q_single_state_geometric_series():
    q = classical_q_values(single_state_mdp(), Policy.uniform(1, 1))
    assert q[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_q_zero_rewards():
    mdp = FiniteMdp(np.ones((1, 1, 1)), _const_reward(point_mass(0.0), 1, 1), 0.5, 1.0)
    assert classical_q_values(mdp, Policy.uniform(1, 1))[0, 0] == 0.0


def test_q_residual_small(rng):
    for _ in range(10):
        mdp = random_mdp(rng, 4, 2, 0.9)
        pol = random_policy(rng, 4, 2)
        q = classical_q_values(mdp, pol).reshape(-1)
        kernel = policy_kernel(mdp, pol).reshape(8, 8)
        rbar = np.array([reward_marginal(mdp, s, a).mean() for s in range(4) for a in range(2)])
        residual = np.max(np.abs(q - rbar - mdp.gamma * kernel @ q))
        assert residual <= 1e-10


# ---------------------------------------------------------------------------
# Monte Carlo oracle

def test_mc_deterministic_chain():
    mdp = single_state_mdp()
    emp = monte_carlo_returns(mdp, Policy.uniform(1, 1), 0, 0, 50, 64, seed=5)
    assert emp.n_atoms == 1
    assert abs(emp.xs[0] - 2.0) <= 2.0 ** -49 * 2.0


def test_mc_single_sample():
    emp = monte_carlo_returns(two_state_chain(), Policy.uniform(2, 1), 0, 0, 30, 1, seed=17)
    assert emp.n_atoms == 1


def test_mc_seed_determinism():
    mdp = two_state_chain()
    pol = Policy.uniform(2, 1)
    a = monte_carlo_returns(mdp, pol, 0, 0, 30, 500, seed=123)
    b = monte_carlo_returns(mdp, pol, 0, 0, 30, 500, seed=123)
    assert a.atoms == b.atoms
    c = monte_carlo_returns(mdp, pol, 0, 0, 30, 500, seed=124)
    assert a.atoms != c.atoms


def test_mc_mean_clt_consistency():
    mdp = two_state_chain()
    pol = Policy.uniform(2, 1)
    q = classical_q_values(mdp, pol)
    horizon = bias_horizon(mdp)
    n = 4000
    hits = 0
    trials = 40
    for k in range(trials):
        emp = monte_carlo_returns(mdp, pol, 0, 0, horizon, n, seed=1000 + k)
        std = math.sqrt(max(float(emp.ws @ (emp.xs - emp.mean()) ** 2), 1e-12))
        if abs(emp.mean() - q[0, 0]) <= 5.0 * std / math.sqrt(n):
            hits += 1
    assert hits >= 0.95 * trials


def test_bias_horizon_tail_bound():
    mdp = single_state_mdp()
    h = bias_horizon(mdp, 1e-9)
    assert mdp.gamma ** h * mdp.r_max / (1 - mdp.gamma) <= 1e-9
    assert mdp.gamma ** (h - 1) * mdp.r_max / (1 - mdp.gamma) > 1e-9
