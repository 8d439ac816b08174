"""Scenario documents, builtin herds and seeded random herds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .engine import SolverSettings
from .model import FunctionSpec, HerdState, ModelError, ModelParams, make_spec


class ScenarioError(ValueError):
    """A scenario document is malformed or violates an invariant."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    params: ModelParams
    initial: tuple[tuple[float, int], ...]
    settings: SolverSettings = field(default_factory=SolverSettings)
    seed: int | None = None

    def __post_init__(self):
        initial = tuple((float(p), int(w)) for p, w in self.initial)
        object.__setattr__(self, "initial", initial)
        if not initial:
            raise ScenarioError("initial: at least one group is required")
        for k, (pos, weight) in enumerate(initial):
            if not math.isfinite(pos):
                raise ScenarioError(f"initial[{k}].position: must be finite")
            if weight < 1:
                raise ScenarioError(f"initial[{k}].weight: must be ≥ 1 (got {weight})")
            if pos >= self.params.home:
                raise ScenarioError(
                    f"initial[{k}].position: must lie below home={self.params.home} (got {pos})"
                )

    @property
    def total(self) -> int:
        return sum(w for _, w in self.initial)

    def herd(self) -> HerdState:
        pos = np.array([p for p, _ in self.initial])
        w = np.array([w for _, w in self.initial], dtype=np.int64)
        return HerdState(0.0, pos, w)


_TOP_KEYS = {"name", "params", "initial", "settings", "seed"}
_PARAM_KEYS = {"epsilon", "v", "kappa", "home", "d_lo", "d_hi", "sight", "panic_profile", "environment"}
_SETTING_KEYS = {"step", "event_tol", "merge_gap", "horizon", "max_events"}


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where}: expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(map(str, unknown))}")


def _number(mapping: dict, key: str, where: str, *, integer: bool = False):
    if key not in mapping:
        raise ScenarioError(f"{where}.{key}: missing")
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key}: expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ScenarioError(f"{where}.{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _function_spec(raw, role: str) -> FunctionSpec:
    where = f"params.{role}"
    raw = _require_mapping(raw, where)
    if "kind" not in raw:
        raise ScenarioError(f"{where}.kind: missing")
    kind = raw["kind"]
    values = {}
    for key, value in raw.items():
        if key == "kind":
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{where}.{key}: expected a number, got {value!r}")
        values[key] = value
    try:
        return make_spec(role, kind, **values)
    except ModelError as exc:
        raise ScenarioError(f"params.{exc}") from None


def scenario_from_dict(doc) -> ScenarioConfig:
    doc = _require_mapping(doc, "document")
    _reject_unknown(doc, _TOP_KEYS, "document")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name: expected a non-empty string")

    raw_params = _require_mapping(doc.get("params"), "params")
    _reject_unknown(raw_params, _PARAM_KEYS, "params")
    scalars = {k: _number(raw_params, k, "params") for k in ("epsilon", "v", "home", "d_lo", "d_hi")}
    kappa = _number(raw_params, "kappa", "params", integer=True)
    specs = {}
    for role, default in (("sight", "constant"), ("panic_profile", "ramp"), ("environment", "neutral")):
        specs[role] = _function_spec(raw_params.get(role, {"kind": default}), role)
    try:
        params = ModelParams(kappa=kappa, **scalars, **specs)
    except ModelError as exc:
        raise ScenarioError(str(exc)) from None

    raw_initial = doc.get("initial")
    if not isinstance(raw_initial, list):
        raise ScenarioError("initial: expected a list of {position, weight} entries")
    initial = []
    for k, entry in enumerate(raw_initial):
        where = f"initial[{k}]"
        entry = _require_mapping(entry, where)
        _reject_unknown(entry, {"position", "weight"}, where)
        weight = _number(entry, "weight", where, integer=True) if "weight" in entry else 1
        initial.append((_number(entry, "position", where), weight))

    raw_settings = _require_mapping(doc.get("settings", {}), "settings")
    _reject_unknown(raw_settings, _SETTING_KEYS, "settings")
    settings_kw = {}
    for key in _SETTING_KEYS & set(raw_settings):
        settings_kw[key] = _number(raw_settings, key, "settings", integer=key == "max_events")
    try:
        settings = SolverSettings(**settings_kw)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioError(f"seed: expected an integer, got {seed!r}")
    return ScenarioConfig(name, params, tuple(initial), settings, seed)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate one YAML scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed document: {exc}") from None
    return scenario_from_dict(doc)


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    p = cfg.params
    doc = {
        "name": cfg.name,
        "params": {
            "epsilon": p.epsilon,
            "v": p.v,
            "kappa": p.kappa,
            "home": p.home,
            "d_lo": p.d_lo,
            "d_hi": p.d_hi,
            "sight": {"kind": p.sight.kind, **p.sight.params},
            "panic_profile": {"kind": p.panic_profile.kind, **p.panic_profile.params},
            "environment": {"kind": p.environment.kind, **p.environment.params},
        },
        "initial": [{"position": pos, "weight": w} for pos, w in cfg.initial],
        "settings": {
            "step": cfg.settings.step,
            "event_tol": cfg.settings.event_tol,
            "merge_gap": cfg.settings.merge_gap,
            "horizon": cfg.settings.horizon,
            "max_events": cfg.settings.max_events,
        },
    }
    if cfg.seed is not None:
        doc["seed"] = cfg.seed
    return doc


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(cfg), sort_keys=False, allow_unicode=True)


def random_herd(
    seed: int,
    n_groups: int,
    position_range: tuple[float, float] = (-2.0, 2.0),
    weight_range: tuple[int, int] = (1, 1),
    home: float | None = None,
) -> list[tuple[float, int]]:
    """Seeded herd of ``n_groups`` groups, sorted, with coincident groups merged."""
    lo, hi = position_range
    w_lo, w_hi = weight_range
    if n_groups < 1:
        raise ValueError("n_groups must be ≥ 1")
    if not lo <= hi:
        raise ValueError(f"position range {position_range} is empty")
    if not 1 <= w_lo <= w_hi:
        raise ValueError(f"weight range {weight_range} must satisfy 1 ≤ low ≤ high")
    if home is not None and hi >= home:
        raise ValueError(f"positions must stay below home={home}")
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.uniform(lo, hi, n_groups))
    weights = rng.integers(w_lo, w_hi, endpoint=True, size=n_groups)
    herd: list[tuple[float, int]] = []
    for pos, w in zip(positions.tolist(), weights.tolist()):
        if herd and pos <= herd[-1][0]:
            herd[-1] = (herd[-1][0], herd[-1][1] + w)
        else:
            herd.append((pos, w))
    return herd


def random_scenario(
    seed: int,
    max_groups: int = 10,
    max_total: int = 30,
    environment: str | None = None,
    panic_profile: str | None = None,
    step: float = 0.01,
    horizon: float = 10.0,
) -> ScenarioConfig:
    """Seeded random scenario with parameters drawn from the valid ranges."""
    rng = np.random.default_rng([seed, 7])
    n = int(rng.integers(1, max_groups, endpoint=True))
    max_w = max(1, min(3, max_total // n))
    herd = random_herd(seed, n, (-3.0, 2.0), (1, max_w), home=4.0)
    while sum(w for _, w in herd) > max_total:
        herd.pop()
    eps = float(rng.uniform(0.0, 0.3))
    d_lo = float(rng.uniform(0.3, 1.0))
    sight_kind = ["constant", "gaussian", "ramp"][int(rng.integers(3))]
    sight = {
        "constant": lambda: make_spec("sight", "constant", value=float(rng.uniform(0.2, 1.0))),
        "gaussian": lambda: make_spec("sight", "gaussian", scale=float(rng.uniform(0.5, 2.0))),
        "ramp": lambda: make_spec("sight", "ramp", radius=float(rng.uniform(1.0, 4.0))),
    }[sight_kind]()
    if environment is None:
        environment = "waves" if rng.random() < 0.5 else "neutral"
    if environment == "waves":
        env = make_spec(
            "environment",
            "waves",
            amplitude=float(rng.uniform(0.0, 0.5)),
            omega=float(rng.uniform(0.5, 3.0)),
            phase=float(rng.uniform(0.0, 2 * math.pi)),
            shoreline=0.0,
            blend=float(rng.uniform(0.3, 1.0)),
        )
    else:
        env = make_spec("environment", "neutral")
    if panic_profile is None:
        panic_profile = "ramp"
    params = ModelParams(
        epsilon=eps,
        v=float(eps + rng.uniform(0.3, 1.2)),
        kappa=int(rng.integers(2, 5, endpoint=True)),
        home=4.0,
        d_lo=d_lo,
        d_hi=float(d_lo + rng.uniform(0.2, 1.5)),
        sight=sight,
        panic_profile=make_spec("panic_profile", panic_profile),
        environment=env,
    )
    settings = SolverSettings(step=step, horizon=horizon)
    return ScenarioConfig(f"random-{seed}", params, tuple(herd), settings, seed)


def _figure_params(**env) -> ModelParams:
    return ModelParams(
        epsilon=0.05,
        v=0.5,
        kappa=5,
        home=4.0,
        d_lo=0.3,
        d_hi=0.6,
        sight=make_spec("sight", "gaussian", scale=1.0),
        panic_profile=make_spec("panic_profile", "ramp"),
        environment=make_spec("environment", "waves", shoreline=0.0, **env),
    )


def _row(start: float, spacing: float, count: int) -> list[tuple[float, int]]:
    return [(round(start + spacing * k, 6), 1) for k in range(count)]


def builtin_scenarios() -> list[ScenarioConfig]:
    """Herds of 20 reproducing the behaviour classes of the parade figures.

    The sea occupies the region below 0 and the burrow sits at 4.
    """
    all_home = ScenarioConfig(
        "all-home",
        _figure_params(amplitude=0.3, omega=2.0, phase=0.0, blend=0.5),
        tuple(_row(-1.6, 0.16, 9) + _row(0.2, 0.15, 10) + [(3.0, 1)]),
        SolverSettings(step=0.01, horizon=20.0),
    )
    two_left = ScenarioConfig(
        "two-left-in-water",
        _figure_params(amplitude=0.4, omega=1.5, phase=1.0, blend=0.5),
        tuple([(-3.5, 1), (-3.1, 1)] + _row(-1.6, 0.16, 8) + _row(0.2, 0.15, 10)),
        SolverSettings(step=0.01, horizon=30.0),
    )
    one_frozen = ScenarioConfig(
        "one-frozen-in-water",
        _figure_params(amplitude=0.3, omega=2.5, phase=0.5, blend=0.5),
        tuple([(-3.0, 1)] + _row(-1.6, 0.16, 9) + _row(0.2, 0.15, 10)),
        SolverSettings(step=0.01, horizon=25.0),
    )
    frozen_shore = ScenarioConfig(
        "frozen-on-shore",
        _figure_params(amplitude=0.35, omega=2.0, phase=2.0, blend=0.5),
        tuple([(-2.5, 1), (0.6, 1)] + _row(1.4, 0.12, 18)),
        SolverSettings(step=0.01, horizon=25.0),
    )
    return [all_home, two_left, one_frozen, frozen_shore]


def builtin(name: str) -> ScenarioConfig:
    for cfg in builtin_scenarios():
        if cfg.name == name:
            return cfg
    raise KeyError(name)
