"""
Estimating CVaR from samples
============================

The risk of an arm is measured on the loss scale (loss = 1 - reward), and
CVaR at level alpha averages the worst alpha-fraction of the losses.
"""

import numpy as np

from riskbandit import RiskMeasure, bernoulli_cvar, empirical_cvar, weighted_empirical_cvar

rng = np.random.default_rng(0)
alpha = 0.45

# A Bernoulli loss with probability p has CVaR min(1, p / alpha).
# The empirical estimate converges to it as the sample grows.
p = 0.3
for n in (10, 100, 1000, 10000):
    losses = (rng.random(n) < p).astype(float)
    print(f"n={n:6d}  empirical {empirical_cvar(losses, alpha):.4f}  "
          f"exact {bernoulli_cvar(p, alpha):.4f}")

# When alpha * n is fractional the boundary order statistic enters with its
# fractional share.
x = np.array([0.9, 0.5, 0.1])
print("CVaR_0.5 of", x, "=", empirical_cvar(x, 0.5))

# Weights let old observations count less. Equal weights give back the
# unweighted estimate.
w = 0.9 ** np.arange(x.size)[::-1]
print("discounted:", weighted_empirical_cvar(x, w, 0.5))
print("equal weights:", weighted_empirical_cvar(x, np.ones(3), 0.5))

# Mean-variance is the other supported functional.
mv = RiskMeasure.mean_variance(1.0)
print("MV(1.0) of", x, "=", mv.empirical(x), " Lipschitz constant", mv.lipschitz)
