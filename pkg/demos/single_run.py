"""
One bandit run on a switching environment
=========================================

Build a random instance, let a few policies play it on the same reward
draws, and compare their cumulative rho-regret.
"""

import numpy as np

from riskbandit import (PolicyConfig, RiskMeasure, default_beta, generate_instance,
                        make_policy, reward_uniforms, rho_regret, simulate)
from riskbandit.policies import default_gamma, default_tau

A, T, K = 5, 20000, 4
measure = RiskMeasure.cvar(0.45)
instance = generate_instance(A, T, K, gap=0.2, rng=np.random.default_rng(3))
print("changes (arm, t):", [(a + 1, t) for a, t in instance.arm_changes])

# Every policy sees the same uniforms, so equal actions give equal rewards.
uniforms = reward_uniforms(T, A, np.random.default_rng(4))

configs = {
    "rbocpd_risk_lcb": PolicyConfig(measure, bonus_scale=0.004, beta=default_beta(A, K, T)),
    "risk_lcb": PolicyConfig(measure, bonus_scale=0.004),
    "discounted_risk_lcb": PolicyConfig(measure, bonus_scale=0.004,
                                        discount=default_gamma(K, T)),
    "sliding_window_risk_lcb": PolicyConfig(measure, bonus_scale=0.004,
                                            window=default_tau(K, T)),
    "oracle": PolicyConfig(measure),
}
for name, cfg in configs.items():
    trace = simulate(make_policy(name, instance, cfg), instance, uniforms,
                     np.random.default_rng(5))
    regret = rho_regret(trace, instance, measure)
    print(f"{name:24s} regret {regret.final:8.1f}  restarts {len(trace.restarts)}")
