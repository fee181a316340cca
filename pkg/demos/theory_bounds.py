"""
Evaluating the regret and delay bounds
======================================

The bounds are closed-form; evaluating them shows their scale and how they
move with the instance parameters.
"""

from riskbandit import BoundInputs, corollary_rate, default_beta, delay_bound, f_term
from riskbandit.theory import bound_table, risk_lcb_regret_bound

print("stationary bound, two arms, gap 0.6, T=1000:",
      round(risk_lcb_regret_bound(1000, 1.0, 0.5, [0.6], 2), 2))
print("f(1, 1) =", round(f_term(1, 1), 5))

# Bigger mean shifts are detected faster.
for lam in (0.3, 0.4, 0.6, 1.0):
    d = delay_bound(lam, s=500, delta=0.05)
    print(f"delay bound at shift {lam}: {d.delay}" + ("" if d.bounded else " (not reached)"))

inputs = BoundInputs(horizon=40000, n_arms=5, n_changes=6, lipschitz=1 / 0.45, sigma=0.5,
                     min_gap=0.3, min_change=0.3, beta=default_beta(5, 6, 40000), delta=0.05)
for name, value, note in bound_table(inputs):
    print(f"{name:26s} {value:14.6g}  {note}")

# The order term grows like sqrt(A K T).
for T in (10000, 40000, 160000):
    print(T, round(corollary_rate(BoundInputs(**{**inputs.__dict__, "horizon": T})), 1))
