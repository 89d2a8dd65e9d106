"""Distributional policy evaluation on the bundled three-state chain.

Iterates the CDF-level update to its fixed point, shows the certified
Banach error bound shrinking at the sqrt(gamma) rate, and cross-checks the
result against the classical linear solve and Monte Carlo rollouts.

Run:  python3 demos/demo_policy_evaluation.py
"""

from cramerdp import (
    BellmanConfig,
    classical_q_values,
    cramer_distance,
    evaluate_policy,
    monte_carlo_returns,
)
from cramerdp.io import load_bundled_mdp
from cramerdp.mdp import bias_horizon

mdp, policy = load_bundled_mdp("chain3")
print(f"chain3: S={mdp.n_states} A={mdp.n_actions} gamma={mdp.gamma} "
      f"returns confined to [{mdp.return_interval[0]:g}, {mdp.return_interval[1]:g}]")

result = evaluate_policy(mdp, policy, BellmanConfig(stop_tol=1e-10, max_iter=200))
print(f"\nconverged={result.converged} after {result.iterations} iterations; "
      f"certified error <= {result.banach_bound:.2e}")

print("\niteration trace (distance between successive fields, certified bound):")
for rec in result.trace[:8]:
    print(f"  n={rec.iteration:2d}  step={rec.successive_distance:.3e}  "
          f"bound={rec.banach_bound:.3e}  atoms<={rec.atom_count_max}")
print("  ...")

print("\nfixed-point return laws:")
for s in range(mdp.n_states):
    for a in range(mdp.n_actions):
        atoms = ", ".join(f"{x:g}:{w:g}" for x, w in result.field.entry(s, a).atoms)
        print(f"  Z*({s},{a}) = {{{atoms}}}")

q = classical_q_values(mdp, policy)
print("\nmeans vs classical Q-values (linear solve):")
for s in range(mdp.n_states):
    for a in range(mdp.n_actions):
        mean = result.field.entry(s, a).mean()
        print(f"  ({s},{a}): mean={mean:.10f}  Q={q[s, a]:.10f}  gap={abs(mean - q[s, a]):.2e}")

horizon = bias_horizon(mdp)
emp = monte_carlo_returns(mdp, policy, 0, 0, horizon, 200_000, seed=7)
print(f"\nMonte Carlo check at (0,0): {200_000} rollouts, horizon {horizon}")
print(f"  Cramer distance to the fixed point: {cramer_distance(result.field.entry(0, 0), emp):.2e}")
