"""Pointwise pieces of the parade velocity law.

A herd is a sorted array of group positions together with integer group
weights. The velocity of group ``i`` is

    P_i * (epsilon + V_i) + f(p_i, t)

where ``P_i`` is the panic multiplier, ``V_i`` the strategic velocity
(visual drive for small groups, cruising speed for large ones) and ``f``
the environment forcing. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

SIGHT_KINDS = ("constant", "gaussian", "ramp")
PANIC_KINDS = ("ramp", "always_one")
ENVIRONMENT_KINDS = ("neutral", "waves")

# Allowed parameter names (with defaults) for each catalogue entry.
_CATALOGUE: dict[str, dict[str, dict[str, float]]] = {
    "sight": {
        "constant": {"value": 1.0},
        "gaussian": {"scale": 1.0},
        "ramp": {"radius": 1.0},
    },
    "panic_profile": {
        "ramp": {},
        "always_one": {},
    },
    "environment": {
        "neutral": {},
        "waves": {
            "amplitude": 0.0,
            "omega": 1.0,
            "phase": 0.0,
            "shoreline": 0.0,
            "blend": 1.0,
        },
    },
}


class ModelError(ValueError):
    """Raised when a parameter set or function spec violates its invariants."""


@dataclass(frozen=True)
class FunctionSpec:
    """A catalogue function (``kind``) plus its named scalar parameters."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def get(self, name: str) -> float:
        return float(self.params[name])


def make_spec(role: str, kind: str, **params: float) -> FunctionSpec:
    """Build a validated FunctionSpec for ``role`` filling in defaults."""
    try:
        kinds = _CATALOGUE[role]
    except KeyError:
        raise ModelError(f"unknown function role {role!r}") from None
    if kind not in kinds:
        raise ModelError(
            f"{role}.kind: unknown kind {kind!r} (expected one of {sorted(kinds)})"
        )
    defaults = kinds[kind]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ModelError(f"{role}: unknown parameter(s) {sorted(unknown)} for kind {kind!r}")
    merged = dict(defaults)
    for name, value in params.items():
        value = float(value)
        if not math.isfinite(value):
            raise ModelError(f"{role}.{name}: must be finite")
        merged[name] = value
    spec = FunctionSpec(kind, merged)
    _check_spec(role, spec)
    return spec


def _check_spec(role: str, spec: FunctionSpec) -> None:
    if role == "sight":
        if spec.kind == "constant" and spec.get("value") < 0:
            raise ModelError("sight.value: must be ≥ 0")
        if spec.kind == "gaussian" and spec.get("scale") <= 0:
            raise ModelError("sight.scale: must be > 0")
        if spec.kind == "ramp" and spec.get("radius") <= 0:
            raise ModelError("sight.radius: must be > 0")
    elif role == "environment" and spec.kind == "waves":
        if spec.get("blend") <= 0:
            raise ModelError("environment.blend: must be > 0")


def sight_value(spec: FunctionSpec, r):
    """Evaluate the eye-sight kernel at distance(s) ``r`` ≥ 0."""
    r = np.asarray(r, dtype=float)
    if spec.kind == "constant":
        return np.full_like(r, spec.get("value"))
    if spec.kind == "gaussian":
        return np.exp(-((r / spec.get("scale")) ** 2))
    if spec.kind == "ramp":
        return np.maximum(0.0, 1.0 - r / spec.get("radius"))
    raise ModelError(f"unknown sight kind {spec.kind!r}")


def panic_profile_value(spec: FunctionSpec, r, d_lo: float, d_hi: float):
    """Evaluate the isolation profile: 1 up to ``d_lo``, 0 from ``d_hi`` on."""
    r = np.asarray(r, dtype=float)
    if spec.kind == "ramp":
        return np.clip((d_hi - r) / (d_hi - d_lo), 0.0, 1.0)
    if spec.kind == "always_one":
        return np.ones_like(r)
    raise ModelError(f"unknown panic profile kind {spec.kind!r}")


def environment_value(spec: FunctionSpec, r, t: float):
    """Evaluate the environment forcing at position(s) ``r`` and time ``t``."""
    r = np.asarray(r, dtype=float)
    if spec.kind == "neutral":
        return np.zeros_like(r)
    if spec.kind == "waves":
        amp = spec.get("amplitude")
        if amp == 0.0:
            return np.zeros_like(r)
        ramp = np.clip((spec.get("shoreline") - r) / spec.get("blend"), 0.0, 1.0)
        return amp * math.sin(spec.get("omega") * t + spec.get("phase")) * ramp
    raise ModelError(f"unknown environment kind {spec.kind!r}")


def environment_is_zero(spec: FunctionSpec) -> bool:
    return spec.kind == "neutral" or (spec.kind == "waves" and spec.get("amplitude") == 0.0)


def environment_infimum(spec: FunctionSpec, t_from: float = 0.0) -> float:
    """Exact infimum of ``f`` over all positions and times ``t >= t_from``."""
    if environment_is_zero(spec):
        return 0.0
    if spec.kind == "waves":
        amp = spec.get("amplitude")
        if spec.get("omega") == 0.0:
            # constant in time; the ramp factor sweeps [0, 1]
            return min(0.0, amp * math.sin(spec.get("phase")))
        return -abs(amp)
    raise ModelError(f"no closed-form infimum for environment kind {spec.kind!r}")


@dataclass(frozen=True)
class ModelParams:
    epsilon: float
    v: float
    kappa: int
    home: float
    d_lo: float
    d_hi: float
    sight: FunctionSpec = field(default_factory=lambda: make_spec("sight", "constant"))
    panic_profile: FunctionSpec = field(default_factory=lambda: make_spec("panic_profile", "ramp"))
    environment: FunctionSpec = field(default_factory=lambda: make_spec("environment", "neutral"))

    def __post_init__(self):
        for name in ("epsilon", "v", "home", "d_lo", "d_hi"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError(f"params.{name}: must be finite")
        if isinstance(self.kappa, bool) or int(self.kappa) != self.kappa:
            raise ModelError("params.kappa: must be an integer")
        if self.kappa < 2:
            raise ModelError(f"params.kappa: must satisfy kappa ≥ 2 (got {self.kappa})")
        if self.epsilon < 0:
            raise ModelError(f"params.epsilon: must satisfy ε ≥ 0 (got {self.epsilon})")
        if not self.v > self.epsilon:
            raise ModelError(f"params.v: must satisfy v > ε (got v={self.v}, ε={self.epsilon})")
        if not 0 < self.d_lo < self.d_hi:
            raise ModelError(
                f"params.d_lo/d_hi: must satisfy 0 < d_lo < d_hi (got {self.d_lo}, {self.d_hi})"
            )
        if not self.home > 0:
            raise ModelError(f"params.home: must satisfy home > 0 (got {self.home})")
        for role, kinds in (
            ("sight", SIGHT_KINDS),
            ("panic_profile", PANIC_KINDS),
            ("environment", ENVIRONMENT_KINDS),
        ):
            spec = getattr(self, role)
            if spec.kind not in kinds:
                raise ModelError(f"params.{role}.kind: unknown kind {spec.kind!r}")


@dataclass(frozen=True)
class Arrival:
    group_id: int
    weight: int
    time: float


@dataclass(frozen=True)
class HerdState:
    """Active groups (sorted) plus the groups already clamped at home."""

    time: float
    positions: np.ndarray
    weights: np.ndarray
    ids: tuple[int, ...] = ()
    arrived: tuple[Arrival, ...] = ()

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=np.int64).reshape(-1)
        if positions.shape != weights.shape:
            raise ModelError("positions and weights differ in length")
        if np.any(weights < 1):
            raise ModelError("all weights must be ≥ 1")
        ids = tuple(self.ids) if self.ids else tuple(range(len(positions)))
        if len(ids) != len(positions):
            raise ModelError("ids and positions differ in length")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "arrived", tuple(self.arrived))

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def active_weight(self) -> int:
        return int(self.weights.sum())

    @property
    def arrived_weight(self) -> int:
        return sum(a.weight for a in self.arrived)

    @property
    def total(self) -> int:
        return self.active_weight + self.arrived_weight

    def is_ordered(self) -> bool:
        return bool(np.all(np.diff(self.positions) > 0))


def mu(ell: int, kappa: int) -> int:
    """1 when a group of ``ell`` penguins is large enough to cruise."""
    return 1 if ell >= kappa else 0


def group_indicator(ell: int) -> int:
    """1 for a group of two or more penguins, 0 for a singleton."""
    return 1 if ell >= 2 else 0


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise IndexError(f"group index {i} out of range for {n} groups")


def visual_drive(i: int, positions, weights, sight: FunctionSpec) -> float:
    positions = np.asarray(positions, dtype=float)
    weights = np.asarray(weights, dtype=float)
    _check_index(i, len(positions))
    diff = positions - positions[i]
    return float(np.sum(np.sign(diff) * weights * sight_value(sight, np.abs(diff))))


def strategic_velocity(i: int, positions, weights, params: ModelParams) -> float:
    _check_index(i, len(positions))
    if mu(int(weights[i]), params.kappa):
        return params.v
    return visual_drive(i, positions, weights, params.sight)


def _lone_panic(params: ModelParams) -> float:
    # empty max over neighbours is 0, except in no-panic mode where phi is identically 1
    return 1.0 if params.panic_profile.kind == "always_one" else 0.0


def panic(i: int, positions, weights, params: ModelParams) -> float:
    positions = np.asarray(positions, dtype=float)
    _check_index(i, len(positions))
    if group_indicator(int(weights[i])):
        return 1.0
    others = np.delete(positions, i)
    if others.size == 0:
        return _lone_panic(params)
    phi = panic_profile_value(params.panic_profile, np.abs(others - positions[i]), params.d_lo, params.d_hi)
    return float(np.max(phi))


def panic_vector(positions, weights, params: ModelParams) -> np.ndarray:
    """All panic multipliers at once; agrees with :func:`panic` componentwise."""
    positions = np.asarray(positions, dtype=float)
    weights = np.asarray(weights)
    n = len(positions)
    out = np.ones(n)
    if n == 0:
        return out
    lonely = weights < 2
    if not lonely.any():
        return out
    if n == 1:
        out[0] = _lone_panic(params)
        return out
    dist = np.abs(positions[:, None] - positions[None, :])
    phi = panic_profile_value(params.panic_profile, dist, params.d_lo, params.d_hi)
    np.fill_diagonal(phi, -np.inf)
    out[lonely] = phi.max(axis=1)[lonely]
    return out


def _index_signs(n: int) -> np.ndarray:
    idx = np.arange(n)
    return np.sign(idx[None, :] - idx[:, None]).astype(float)


def velocity_terms(positions, weights, t: float, params: ModelParams, ordered: bool = False):
    """Return ``(rhs, panic)`` arrays for the active herd.

    With ``ordered=True`` the sign in the visual drive is taken from the index
    order instead of the positions. On sorted input the two coincide; the
    index version stays Lipschitz when a trial step pushes neighbours past
    each other, which is what event localization needs.
    """
    positions = np.asarray(positions, dtype=float)
    weights = np.asarray(weights)
    n = len(positions)
    if n == 0:
        return np.zeros(0), np.zeros(0)
    diff = positions[None, :] - positions[:, None]
    kernel = sight_value(params.sight, np.abs(diff))
    signs = _index_signs(n) if ordered else np.sign(diff)
    drive = np.sum(signs * weights[None, :].astype(float) * kernel, axis=1)
    strategic = np.where(weights >= params.kappa, params.v, drive)
    pan = panic_vector(positions, weights, params)
    out = pan * (params.epsilon + strategic) + environment_value(params.environment, positions, t)
    return out, pan


def rhs(positions, weights, t: float, params: ModelParams) -> np.ndarray:
    return velocity_terms(positions, weights, t, params)[0]
