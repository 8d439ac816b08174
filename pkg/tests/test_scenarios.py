import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parade.model import environment_value, make_spec
from parade.scenarios import (
    ScenarioError,
    builtin_scenarios,
    dump_scenario,
    parse_scenario,
    random_herd,
    random_scenario,
)

MINIMAL = textwrap.dedent(
    """\
    name: pair
    params:
      epsilon: 0.1
      v: 1.0
      kappa: 3
      home: 4.0
      d_lo: 0.5
      d_hi: 1.0
    initial:
      - {position: -1.0, weight: 1}
      - {position: 1.0, weight: 1}
    """
)


def test_minimal_document():
    cfg = parse_scenario(MINIMAL)
    assert len(cfg.initial) == 2 and cfg.total == 2
    assert cfg.params.sight.kind == "constant"
    assert cfg.params.environment.kind == "neutral"


def test_full_document():
    text = MINIMAL + textwrap.dedent(
        """\
        settings: {step: 0.02, event_tol: 1.0e-8, merge_gap: 1.0e-9, horizon: 5, max_events: 50}
        seed: 4
        """
    )
    text = text.replace(
        "  d_hi: 1.0\n",
        "  d_hi: 1.0\n  sight: {kind: ramp, radius: 2.0}\n"
        "  environment: {kind: waves, amplitude: 0.2, omega: 1.0, phase: 0.0, shoreline: 0.0, blend: 0.5}\n",
    )
    cfg = parse_scenario(text)
    assert cfg.settings.step == 0.02 and cfg.settings.max_events == 50
    assert cfg.params.sight.get("radius") == 2.0
    assert cfg.params.environment.get("amplitude") == 0.2
    assert cfg.seed == 4


@pytest.mark.parametrize(
    "old, new, message",
    [
        ("kappa: 3", "kappa: 1", "kappa ≥ 2"),
        ("v: 1.0", "v: 0.1", "v > ε"),
        ("d_lo: 0.5", "d_lo: 1.5", "d_lo"),
        ("home: 4.0", "home: 0.5", "initial[1].position"),
        ("weight: 1}\n  - {position: 1.0", "weight: 0}\n  - {position: 1.0", "initial[0].weight"),
        ("kappa: 3", "kappa: 2.5", "params.kappa"),
        ("epsilon: 0.1", "epsilon: fast", "params.epsilon"),
        ("epsilon: 0.1", "epsilon: 0.1\n  colour: red", "colour"),
        ("d_hi: 1.0", "d_hi: 1.0\n  sight: {kind: telescope}", "telescope"),
    ],
)
def test_rejections_name_the_field(old, new, message):
    assert old in MINIMAL
    with pytest.raises(ScenarioError, match=message.replace("[", r"\[").replace("]", r"\]")):
        parse_scenario(MINIMAL.replace(old, new, 1))


def test_malformed_yaml():
    with pytest.raises(ScenarioError, match="malformed"):
        parse_scenario("name: [unclosed")
    with pytest.raises(ScenarioError, match="mapping"):
        parse_scenario("- just a list")


def test_unknown_settings_key():
    with pytest.raises(ScenarioError, match="stepsize"):
        parse_scenario(MINIMAL + "settings: {stepsize: 0.1}\n")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_round_trip(seed):
    cfg = random_scenario(seed)
    again = parse_scenario(dump_scenario(cfg))
    assert again == cfg
    assert parse_scenario(dump_scenario(again)) == cfg


def test_builtins():
    names = [cfg.name for cfg in builtin_scenarios()]
    assert names == ["all-home", "two-left-in-water", "one-frozen-in-water", "frozen-on-shore"]
    for cfg in builtin_scenarios():
        assert cfg.params.home == 4.0
        assert cfg.total == 20
        assert cfg.params.environment.get("shoreline") == 0.0
        assert parse_scenario(dump_scenario(cfg)) == cfg


def test_waves_zero_amplitude_is_neutral():
    grid = np.linspace(-5, 5, 101)
    quiet = make_spec("environment", "waves", amplitude=0.0, omega=3.0, phase=1.0, blend=0.4)
    neutral = make_spec("environment", "neutral")
    for t in (0.0, 0.7, 13.1):
        assert np.array_equal(environment_value(quiet, grid, t), environment_value(neutral, grid, t))


@given(st.floats(0.0, 100.0), st.floats(0.0, 50.0), st.floats(-2.0, 2.0))
def test_waves_vanish_on_land(r_above, t, shore):
    waves = make_spec("environment", "waves", amplitude=0.8, omega=1.3, phase=0.2, shoreline=shore, blend=0.3)
    assert environment_value(waves, [shore + r_above], t)[0] == 0.0


def test_random_herd_deterministic():
    assert random_herd(5, 6, (-2, 1), (1, 3)) == random_herd(5, 6, (-2, 1), (1, 3))
    assert random_herd(5, 6) != random_herd(6, 6)


def test_random_herd_single_and_below_home():
    assert len(random_herd(1, 1)) == 1
    herd = random_herd(11, 40, (-3.0, 3.9), (1, 2), home=4.0)
    positions = [p for p, _ in herd]
    assert all(p < 4.0 for p in positions)
    assert positions == sorted(positions) and len(set(positions)) == len(positions)
    with pytest.raises(ValueError):
        random_herd(1, 3, (0.0, 5.0), home=4.0)


def test_random_herd_merges_duplicates():
    herd = random_herd(2, 5, (1.0, 1.0), (1, 1))
    assert herd == [(1.0, 5)]
