import pytest

from cfhist.scenario import (ScenarioError, parse_intervention, parse_scenario, print_intervention,
                             print_scenario, validate_intervention)
from cfhist.study import data_path

from conftest import BASELINE_ONLY


def test_print_parse_idempotent(dynamic):
    text = print_scenario(dynamic)
    again = parse_scenario(text, base_dir=data_path("cde_dynamic.yaml").parent)
    assert again == dynamic
    assert print_scenario(again) == text
    assert again.digest == dynamic.digest


def test_intervention_roundtrip(theta1, theta2):
    for th in (theta1, theta2):
        assert parse_intervention(print_intervention(th)) == th
    assert theta1.digest != theta2.digest


def test_no_modules():
    with pytest.raises(ScenarioError, match="no modules"):
        parse_scenario("horizon: 1.0\n")


def test_baseline_only_is_valid():
    s = parse_scenario(BASELINE_ONLY)
    assert s.modules == () and s.variables == ("A",)


def test_table_must_sum_to_one():
    bad = BASELINE_ONLY.replace("[[0.5, 0.5]]", "[[0.5, 0.4]]")
    with pytest.raises(ScenarioError, match="sums to") as exc:
        parse_scenario(bad)
    assert "table A" in str(exc.value)
    assert exc.value.line is not None


@pytest.mark.parametrize("doc, msg", [
    ("horizon: 1.0\nmodules: {X: {intensity: '0.5*Y', depends: []}}", "undeclared"),
    ("horizon: 1.0\nmodules: {X: {intensity: '0.5*t'}}", "may not read t"),
    ("horizon: 1.0\nmodules: {X: {intensity: '0.5'}}\nbogus: 1", "unknown sections"),
    ("horizon: 1.0\nschedules: {K: {times: [0.5, 0.2], probability: '0.5'}}", "strictly increasing"),
    ("horizon: 1.0\nschedules: {K: {times: [0.5], probability: '0.5'}, M: {times: [0.5], probability: '0.5'}}",
     "simultaneous"),
])
def test_scenario_errors(doc, msg):
    with pytest.raises(ScenarioError, match=msg):
        parse_scenario(doc)


def codes(scenario, text):
    return sorted({c for c, _, _ in validate_intervention(scenario, parse_intervention(text)).violations})


def test_validate_intervention_codes(dynamic, theta1):
    assert validate_intervention(dynamic, theta1).ok
    assert codes(dynamic, "baseline: {Q: 1}") == ["a"]
    assert codes(dynamic, "baseline: {A: 2}") == ["a"]
    assert codes(dynamic, "baseline: {A: 'L'}") == ["b"]
    assert codes(dynamic, "baseline: {A: 1, L: 'A'}") == ["b"]
    assert codes(dynamic, "baseline: {L: 'A'}") == []
    assert codes(dynamic, "baseline: {A: 1}\nschedules: {K: 'A'}") == ["c"]
    assert codes(dynamic, "schedules: {K: 'L'}") == []
    assert codes(dynamic, "schedules: {B: [0]}") == ["d"]
    assert codes(dynamic, "schedules: {K: [1, 0]}") == ["a"]
