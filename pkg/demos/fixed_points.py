"""Fixed points of the Gaussian recursion and the errors they predict.

Run:  python demos/fixed_points.py
"""
import math

from sbmbp import derive_params
from sbmbp.density_evolution import Kind, fixed_points, predicted_misclassification, trajectory
from sbmbp.harness import sweep

for rho, mu, nu in [(0.5, 3, 0), (0.5, 4, 1), (0.3, 2, -1), (0.01, 50, 0)]:
    p = derive_params(10**6, rho, 3000, mu, nu)
    fp = fixed_points(p)
    v = trajectory(p, Kind.V, t_max=5).values
    print(f"rho={rho:<5} mu={mu:<3} nu={nu:<3} v_lower={fp.v_lower:.4f} v_upper={fp.v_upper:.4f}"
          f"  unique={fp.unique}")
    print("    v_t:", " ".join(f"{x:.3f}" for x in v))
    print("    predicted error:", " ".join(f"{predicted_misclassification(x, rho):.4f}" for x in v))

# the symmetric model has 0 as a fixed point; Q(sqrt(v_upper)) is what a warm start reaches
p = derive_params(10**6, 0.5, 16, 3, 3)
fp = fixed_points(p)
print(f"\nmu=nu=3: v_lower={fp.v_lower}, v_upper={fp.v_upper:.4f}, "
      f"Q(sqrt(v_upper))={0.5 * math.erfc(math.sqrt(fp.v_upper / 2)):.4f}")

rep = sweep()
for case in rep.summary["fixed_points"]:
    print(f"rho={case['rho']} mu={case['mu']} nu={case['nu']}: roots",
          ", ".join(f"{r:.4f}" for r in case["roots"]))
