"""Risk-averse bandits for piecewise-stationary Bernoulli environments.

Risk-LCB with per-arm restarted Bayesian online change-point detection,
baselines, environment generation, rho-regret evaluation and numeric
bound evaluation.
"""
from .risk import (RiskMeasure, binary_risk, bernoulli_cvar, bernoulli_mv, empirical_cvar,
                   empirical_mv, lipschitz_constant, weighted_empirical_cvar)
from .cpd import (RBOCPD, DetectionReport, EtaSchedule, GLRDetector, bank_init, bank_step,
                  detect_stream, eta_default, glr_detect, laplace_predict, rbocpd_batch)
from .env import (SwitchingBanditInstance, generate_instance, load_instance_csv,
                  reward_uniforms, rho_regret, segment_regret, stationary_instance,
                  write_instance_csv)
from .policies import (POLICIES, PolicyConfig, default_beta, default_gamma, default_tau,
                       make_policy, select_action, simulate)
from .theory import (BoundInputs, confidence_C, corollary_rate, delay_bound, f_term,
                     nonstationary_pull_bound, risk_lcb_regret_bound)
from .config import ExperimentConfig, load_config, parse_config
from .harness import RunSummary, emit_csv, emit_svg, run_experiment

__version__ = "0.1.0"
