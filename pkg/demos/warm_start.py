"""Warm-started BP from a noisy partition in the symmetric model.

A partition with a known error rate stands in for spectral recovery, so
the effect of the warm start is visible at small n.

Run:  python demos/warm_start.py
"""
import math

import numpy as np

from sbmbp import derive_params, sample_sbm
from sbmbp.density_evolution import fixed_points
from sbmbp.graph_bp import algorithm2, misclassified_fraction

p = derive_params(2**15, 0.5, 30, 5, 5)
g = sample_sbm(p, seed=3)
flip = np.random.default_rng(0).random(g.n) < 0.3


def noisy(sub, params, seed):
    return np.where(flip[sub.origin], -sub.sigma, sub.sigma)


target = 0.5 * math.erfc(math.sqrt(fixed_points(p).v_upper / 2))
print(f"starting error 0.30, Q(sqrt(v_upper)) = {target:.4f}")
for t in (1, 2, 3, 4):
    res = algorithm2(g, p, t, recovery=noisy, seed=5, alpha_hat=0.3)
    keep = ~res.reserved
    print(f"t={t}: error {misclassified_fraction(res.labels[keep], g.sigma[keep], 'flip'):.4f}")
