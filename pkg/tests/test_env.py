import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskbandit.env import (InstanceFormatError, SwitchingBanditInstance, default_min_segment,
                            dump_instance_csv, generate_instance, load_instance_csv,
                            parse_instance_csv, reward_uniforms, rho_regret, sample_reward,
                            segment_regret, stationary_instance, true_risk,
                            write_instance_csv)
from riskbandit.risk import RiskMeasure

CVAR = RiskMeasure.cvar(0.45)


def two_arm():
    return SwitchingBanditInstance((
        ((1, 50, 0.8), (51, 100, 0.2)),
        ((1, 100, 0.5),),
    ))


def test_instance_accessors():
    inst = two_arm()
    assert inst.horizon == 100 and inst.n_arms == 2 and inst.n_changes == 1
    assert inst.arm_changes == [(0, 51)]
    assert inst.change_points == [51]
    assert inst.mean(0, 50) == 0.8 and inst.mean(0, 51) == 0.2
    assert inst.means.shape == (100, 2)
    assert inst.min_change_gap() == pytest.approx(0.6)
    with pytest.raises(ValueError):
        inst.mean(2, 1)
    with pytest.raises(ValueError):
        inst.mean(0, 101)


def test_instance_validation():
    with pytest.raises(ValueError):
        SwitchingBanditInstance((((1, 10, 0.5),),))
    with pytest.raises(ValueError):
        SwitchingBanditInstance((((1, 10, 0.5),), ((1, 9, 0.5),)))
    with pytest.raises(ValueError):
        SwitchingBanditInstance((((1, 4, 0.5), (6, 10, 0.5)), ((1, 10, 0.5),)))
    with pytest.raises(ValueError):
        SwitchingBanditInstance((((1, 10, 1.5),), ((1, 10, 0.5),)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(50, 3000), st.integers(0, 8),
       st.floats(0.05, 0.6), st.booleans(), st.integers(0, 2 ** 32 - 1))
def test_generated_instances_respect_constraints(arms, horizon, k, gap, glob, seed):
    min_seg = default_min_segment(horizon, k)
    try:
        inst = generate_instance(arms, horizon, k, gap, rng=np.random.default_rng(seed),
                                 global_switch=glob)
    except ValueError as exc:
        assert "infeasible" in str(exc)
        return
    assert inst.horizon == horizon and inst.n_arms == arms
    assert inst.n_changes == (k * arms if glob else k)
    for arm in inst.segments:
        for start, end, _ in arm:
            assert end - start + 1 >= min_seg
        for prev, cur in zip(arm, arm[1:]):
            assert abs(cur[2] - prev[2]) >= gap - 1e-12


def test_global_switch_changes_every_arm_together():
    inst = generate_instance(3, 1000, 2, 0.3, rng=np.random.default_rng(1), global_switch=True)
    times = {tuple(s for s, _, _ in arm[1:]) for arm in inst.segments}
    assert len(times) == 1 and len(inst.change_points) == 2


def test_generation_is_seeded():
    a = generate_instance(5, 40000, 6, 0.2, rng=np.random.default_rng(7))
    b = generate_instance(5, 40000, 6, 0.2, rng=np.random.default_rng(7))
    assert a == b


@pytest.mark.parametrize("args", [
    dict(n_arms=1, horizon=100, n_changes=0, gap=0.2),
    dict(n_arms=2, horizon=100, n_changes=-1, gap=0.2),
    dict(n_arms=2, horizon=100, n_changes=1, gap=1.2),
    dict(n_arms=2, horizon=10, n_changes=5, gap=0.2, min_seg=5),
])
def test_generation_rejects_bad_input(args):
    with pytest.raises(ValueError):
        generate_instance(**args)


def test_stationary_and_rewards():
    inst = stationary_instance([0.0, 1.0], 20)
    rng = np.random.default_rng(0)
    assert all(sample_reward(inst, 0, t, rng) == 0 for t in range(1, 21))
    assert all(sample_reward(inst, 1, t, rng) == 1 for t in range(1, 21))
    u = reward_uniforms(20, 2, np.random.default_rng(0))
    assert u.shape == (20, 2) and u.min() >= 0 and u.max() < 1


def test_true_risk_uses_loss_scale():
    inst = two_arm()
    assert true_risk(inst, 0, 1, CVAR) == pytest.approx(0.2 / 0.45)
    assert true_risk(inst, 0, 60, CVAR) == 1.0
    assert inst.risk_matrix(CVAR)[0, 1] == 1.0  # clamped: 0.5 / 0.45 > 1
    assert inst.min_risk_gap(CVAR) == pytest.approx(1.0 - 0.2 / 0.45)


def test_rho_regret_oracle_is_zero_and_matches_segments():
    inst = two_arm()
    best = np.argmin(inst.risk_matrix(CVAR), axis=1)
    trace = rho_regret(best, inst, CVAR)
    assert trace.final == 0.0
    rng = np.random.default_rng(2)
    acts = rng.integers(0, 2, 100)
    trace = rho_regret(acts, inst, CVAR)
    assert np.all(np.diff(trace.cumulative) >= 0)
    assert trace.final == pytest.approx(segment_regret(acts, inst, CVAR))
    assert trace.change_points == [(0, 51)]


def test_rho_regret_validates():
    inst = two_arm()
    with pytest.raises(ValueError):
        rho_regret([0] * 99, inst, CVAR)
    with pytest.raises(ValueError):
        rho_regret([2] * 100, inst, CVAR)


def test_csv_round_trip(tmp_path):
    inst = generate_instance(4, 5000, 5, 0.2, rng=np.random.default_rng(3))
    path = tmp_path / "env.csv"
    write_instance_csv(inst, path)
    assert load_instance_csv(path) == inst
    assert dump_instance_csv(inst).splitlines()[0] == "arm,start,end,mean"


@pytest.mark.parametrize("text,line", [
    ("arm,begin,end,mean\n1,1,10,0.5\n", 1),
    ("arm,start,end,mean\n1,1,10,0.5\n2,1,10,x\n", 3),
    ("arm,start,end,mean\n1,1,10,0.5\n1,8,12,0.2\n2,1,12,0.5\n", 3),
    ("arm,start,end,mean\n1,1,10,0.5\n1,12,20,0.2\n2,1,20,0.5\n", 3),
    ("arm,start,end,mean\n1,1,10,0.5\n2,1,10,1.5\n", 3),
    ("arm,start,end,mean\n1,1,10,0.5\n2,1,12,0.5\n", 3),
])
def test_csv_errors_carry_line_numbers(text, line):
    with pytest.raises(InstanceFormatError) as info:
        parse_instance_csv(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
