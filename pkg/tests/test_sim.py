import numpy as np
import pytest

from weaksocial import load_fixture
from weaksocial.errors import ValidationError, WindowTooLong, ZeroEvidence
from weaksocial.graph import confinement_matrix, influence_matrix
from weaksocial.predict import confinement_bands, limiting_beliefs
from weaksocial.scenario import Scenario
from weaksocial.sim import (
    Model,
    SimulationConfig,
    assess,
    child_rng,
    default_window,
    draw_signals,
    run,
    step,
)


@pytest.fixture(scope="module")
def caseA():
    return load_fixture("fig6_caseA")


def test_config_validation():
    with pytest.raises(ValidationError):
        SimulationConfig(steps=10, record_stride=3)
    with pytest.raises(ValidationError):
        SimulationConfig(trials=0)
    with pytest.raises(ValidationError):
        SimulationConfig(base_seed=-1)
    assert SimulationConfig(model="self-aware").model is Model.SELF_AWARE


def test_child_seed_is_pure_function():
    a = child_rng(5, 3).random(4)
    b = child_rng(5, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, child_rng(5, 4).random(4))


def test_signal_frequencies(caseA):
    sig = draw_signals(caseA.models, caseA.agent_truth, 40000, child_rng(0, 0))
    # agent 3 (index 2) observes H with probability 1/3 under theta1
    assert np.mean(sig[:, 2] == 0) == pytest.approx(1 / 3, abs=0.01)


def test_zero_steps_records_priors(caseA):
    tr = run(caseA, SimulationConfig(steps=0, trials=2))
    assert tr.beliefs.shape == (2, 1, 8, 3)
    assert np.array_equal(tr.beliefs[0, 0], caseA.priors)


def test_stride(caseA):
    full = run(caseA, SimulationConfig(steps=40, base_seed=3))
    thin = run(caseA, SimulationConfig(steps=40, base_seed=3, record_stride=10))
    assert thin.times.tolist() == [0, 10, 20, 30, 40]
    assert np.array_equal(thin.beliefs[0], full.beliefs[0, ::10])


def test_trial_independent_of_batch(caseA):
    one = run(caseA, SimulationConfig(steps=200, trials=1, base_seed=9))
    many = run(caseA, SimulationConfig(steps=200, trials=3, base_seed=9, threads=3))
    assert np.array_equal(one.beliefs[0], many.beliefs[0])
    assert not np.array_equal(many.beliefs[0], many.beliefs[1])


def test_step_matches_kernel(caseA):
    cfg = SimulationConfig(steps=5, base_seed=2, backend="python")
    tr = run(caseA, cfg)
    sig = draw_signals(caseA.models, caseA.agent_truth, 5, child_rng(2, 0))
    mu = caseA.priors
    for i in range(5):
        mu = step(mu, sig[i], caseA.matrix, caseA.models, time=i + 1)
    assert np.array_equal(mu, tr.beliefs[0, -1])


def test_zero_evidence_names_agent_and_time():
    base = load_fixture("three_agent")
    priors = np.array(base.priors)
    priors[1] = [1.0, 0.0, 0.0]  # agent 2 rules out its own truth
    table = np.array(base.models.padded()[1])
    s = Scenario(base.matrix, base.space,
                 base.models.__class__.from_tables(
                     [a.table for a in base.models.agents[:1]]
                     + [np.array([[0.0, 1.0], [0.2, 0.8], [0.3, 0.7]])]
                     + [base.models.agents[2].table]),
                 base.agent_truth, priors)
    assert table.shape == (3, 2)
    with pytest.raises(ZeroEvidence) as exc:
        run(s, SimulationConfig(steps=2000, base_seed=0))
    assert exc.value.agent == "2"
    assert exc.value.time >= 1
    assert exc.value.trial == 0


def test_self_aware_needs_schedule(caseA):
    with pytest.raises(ValidationError):
        run(caseA, SimulationConfig(model="self-aware", steps=5))


def test_self_aware_gamma_one_equals_diffusion(caseA):
    from weaksocial.beliefs import AwarenessSchedule

    d = run(caseA, SimulationConfig(steps=300, base_seed=4))
    s = run(caseA, SimulationConfig(model="self-aware", steps=300, base_seed=4,
                                    awareness=AwarenessSchedule(np.ones(8))))
    assert np.array_equal(d.beliefs, s.beliefs)


def test_diagnostics_and_forecasts_shapes(caseA):
    tr = run(caseA, SimulationConfig(steps=10, trials=2))
    assert tr.forecasts.shape == (2, 11, 8, 2)
    assert set(tr.diagnostics) == {"regret_true", "regret_weak", "forecast_kl"}
    assert tr.forecasts.sum(axis=-1) == pytest.approx(np.ones((2, 11, 8)))


def test_default_window():
    assert default_window(7000, 1) == 700
    assert default_window(500, 1) == 100
    assert default_window(50, 1) == 50


def test_assess(caseA):
    p = caseA.partition
    pred = limiting_beliefs(influence_matrix(p), p, caseA.truth, caseA.space)
    tr = run(caseA, SimulationConfig(steps=3000, base_seed=1, record_stride=10))
    rep = assess(tr, pred)
    assert rep.window == 1000 and rep.samples == 100
    sel = tr.times > 2000
    for a in rep.agents:
        emp = tr.beliefs[:, sel, a.agent].mean(axis=(0, 1))
        assert a.empirical == pytest.approx(emp)
        assert a.deviation == pytest.approx(np.abs(emp - pred.q(a.agent)).max())
        assert a.oscillation == pytest.approx(tr.beliefs[0, sel, a.agent].var(axis=0, ddof=1))
    assert all(a.inside_band is None for a in rep.agents)
    with pytest.raises(WindowTooLong):
        assess(tr, pred, window=4000)


def test_assess_bands_only_for_self_aware():
    s = load_fixture("fig6_caseB")
    p = s.partition
    pred = limiting_beliefs(influence_matrix(p), p, s.truth, s.space)
    bands = confinement_bands(pred, confinement_matrix(p), 0.1)
    tr = run(s, SimulationConfig(model="self-aware", steps=2000, base_seed=1))
    rep = assess(tr, pred, bands)
    assert all(a.inside_band is not None for a in rep.agents)
    assert rep.worst() is not None
