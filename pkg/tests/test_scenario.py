import csv
import json

import numpy as np
import pytest

from weaksocial import load_fixture
from weaksocial.errors import ColumnSumMismatch, ParseError, ValidationError
from weaksocial.scenario import (
    check_assumptions,
    dumps,
    export_trace,
    list_fixtures,
    load,
    loads,
    read_trace,
    save,
    write_report,
)
from weaksocial.sim import SimulationConfig, run

MINIMAL = """
[network]
weights = [[1.0, 0.1], [0.0, 0.9]]
[states]
names = ["a", "b"]
[likelihoods.by_signal]
H = [[0.2, 0.5], [0.7, 0.5]]
[truth]
agents = ["a", "b"]
"""


def test_fixtures_load():
    assert set(list_fixtures()) >= {"three_agent", "three_agent_violated", "fig6_caseA",
                                     "fig6_caseB", "strong_three"}
    for name in list_fixtures():
        s = load_fixture(name)
        assert s.name == name


def test_fig6_caseA_contents():
    s = load_fixture("fig6_caseA")
    assert s.matrix.n_agents == 8
    assert s.models[1].table[:, 0].tolist() == [0.75, 0.25, 0.75]
    assert s.agent_truth.tolist() == [0, 0, 0, 1, 1, 2, 2, 2]
    assert np.all(s.priors == 1 / 3)
    assert s.awareness is None


def test_fig6_caseB_fraction_entry():
    s = load_fixture("fig6_caseB")
    assert s.models[7].table[1, 0] == pytest.approx(5 / 7)
    assert s.awareness.gamma.tolist() == [0.4, 0.4, 0.4, 0.5, 0.5, 0.1, 0.1, 0.1]


def test_minimal_defaults():
    s = loads(MINIMAL)
    assert s.models[0].signals == ("H", "T")
    assert s.models[0].table[1].tolist() == pytest.approx([0.7, 0.3])
    assert s.partition.receiving_blocks == ((1,),)


def test_column_error_names_column():
    bad = MINIMAL.replace("[0.0, 0.9]", "[0.0, 0.8]")
    with pytest.raises(ColumnSumMismatch) as exc:
        loads(bad)
    assert exc.value.label == "2"


def test_parse_error_has_line():
    with pytest.raises(ParseError) as exc:
        loads("[network]\nweights = = 1\nlabels = []\n")
    assert exc.value.line == 2


@pytest.mark.parametrize("patch, component", [
    (("agents = [\"a\", \"b\"]", "agents = [\"a\"]"), "truth"),
    (("agents = [\"a\", \"b\"]", "agents = [\"a\", \"z\"]"), "states"),
    (("H = [[0.2, 0.5], [0.7, 0.5]]", "H = [[0.2, 0.5]]"), "likelihoods"),
    (("names = [\"a\", \"b\"]", "names = [\"a\", \"b\"]\n[priors]\nbeliefs = [[0.5, 0.6], [0.5, 0.5]]"),
     "priors"),
])
def test_validation_components(patch, component):
    with pytest.raises(ValidationError) as exc:
        loads(MINIMAL.replace(*patch))
    assert exc.value.component == component


def test_missing_section():
    with pytest.raises(ValidationError) as exc:
        loads("[states]\nnames = [\"a\"]\n")
    assert exc.value.component == "network"


@pytest.mark.parametrize("name", ["three_agent", "fig6_caseA", "fig6_caseB", "strong_three"])
def test_round_trip(name, tmp_path):
    s = load_fixture(name)
    path = tmp_path / "s.toml"
    save(s, path)
    again = load(path)
    assert again == s
    assert dumps(again) == dumps(s)


def test_assumptions_case_a_and_b():
    a = check_assumptions(load_fixture("fig6_caseA"))
    assert [r.agent for r in a.receiving] == ["6", "7", "8"]
    assert a.assumption_holds and a.sending_learns
    assert a.regime == "total-influence"
    b = check_assumptions(load_fixture("fig6_caseB"))
    assert not any(r.holds for r in b.receiving)
    assert b.receiving[0].missing == ("theta1", "theta2")
    assert b.regime == "confinement"
    assert b.applicable("diffusion") == "none"


def test_assumptions_three_agent():
    ok = check_assumptions(load_fixture("three_agent"))
    assert ok.regime == "total-influence"
    assert ok.sending[1].prevailing == {"2": None}
    bad = check_assumptions(load_fixture("three_agent_violated"))
    assert bad.regime == "none"


def test_unidentifiable_single_agent_block():
    s = loads(MINIMAL.replace("[[0.2, 0.5], [0.7, 0.5]]", "[[0.5, 0.5], [0.5, 0.5]]"))
    rep = check_assumptions(s)
    assert not rep.sending[0].identifiable
    assert rep.regime == "none"


def test_strong_network_report():
    rep = check_assumptions(load_fixture("strong_three"))
    assert rep.receiving == []
    assert rep.sending[0].identifiable
    assert rep.regime == "strong"
    json.dumps(rep.as_dict())


def test_export_empty_trace(tmp_path):
    s = load_fixture("fig6_caseA")
    tr = run(s, SimulationConfig(steps=0, trials=2))
    path = tmp_path / "t.csv"
    export_trace(tr, path)
    rows = list(csv.reader(open(path, encoding="utf-8")))
    assert rows[0][:6] == ["trial", "time", "agent", "mu[theta1]", "mu[theta2]", "mu[theta3]"]
    assert len(rows) == 1 + 2 * 8


def test_export_round_trip(tmp_path):
    s = load_fixture("fig6_caseB")
    tr = run(s, SimulationConfig(model="self-aware", steps=50, trials=2, base_seed=1, record_stride=5))
    path = tmp_path / "t.csv"
    export_trace(tr, path)
    back = read_trace(path)
    assert back.states == tr.states and back.labels == tr.labels
    assert np.array_equal(back.times, tr.times)
    assert np.array_equal(back.beliefs, tr.beliefs)
    assert np.array_equal(back.forecasts, tr.forecasts)
    for key in tr.diagnostics:
        assert np.array_equal(back.diagnostics[key], tr.diagnostics[key])


def test_write_report(tmp_path):
    j = write_report(tmp_path / "r.json", {"x": np.arange(2)})
    assert json.loads(j.read_text()) == {"x": [0, 1]}
    t = write_report(tmp_path / "r.txt", {}, "hello\n")
    assert t.read_text() == "hello\n"


def test_fixture_env(tmp_path, monkeypatch):
    (tmp_path / "mine.toml").write_text(MINIMAL)
    monkeypatch.setenv("WEAKSOCIAL_FIXTURES", str(tmp_path))
    assert list_fixtures() == ["mine"]
    assert load("fixtures/mine").name == "mine"
    assert load("three_agent").name == "three_agent"
