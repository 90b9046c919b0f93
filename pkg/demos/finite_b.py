"""How far desk-scale BP sits from the large-b prediction.

Runs Algorithm 1 on one sampled graph and the tree Monte Carlo for the
same parameters, then shows the tree gap shrinking as b grows.

Run:  python demos/finite_b.py
"""
from sbmbp import derive_params, sample_sbm
from sbmbp.density_evolution import Kind, predicted_misclassification, trajectory
from sbmbp.graph_bp import bp_beliefs_by_round, decide, misclassified_fraction
from sbmbp.tree_bp import estimate_tree_errors

p = derive_params(200_000, 0.5, 16, 4, 0)
g = sample_sbm(p, seed=1)
v = trajectory(p, Kind.V, t_max=4)
print(" t  graph    tree     prediction")
for state in bp_beliefs_by_round(g, p, 4):
    t = state.t
    err = misclassified_fraction(decide(state, p), g.sigma)
    tree = estimate_tree_errors(p, t, trials=20_000, seed=t).q_star
    print(f" {t}  {err:.4f}   {tree:.4f}   {predicted_misclassification(v.at(t), 0.5):.4f}")

print("\n b     tree q*(t=2) - prediction")
for b in (16, 64, 256):
    q = derive_params(10**7, 0.5, b, 4, 0)
    r = estimate_tree_errors(q, 2, trials=20_000, seed=2)
    pred = predicted_misclassification(trajectory(q, Kind.V, t_max=2).at(2), 0.5)
    print(f" {b:<5} {r.q_star - pred:+.4f} (se {r.q_star_se:.4f})")
