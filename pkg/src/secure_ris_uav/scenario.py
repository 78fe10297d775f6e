"""Static experiment configuration: geometry, link budget, fading and tolerances.

All quantities are SI/linear. Helpers ``db`` and ``dbm`` convert the usual
logarithmic figures (``dbm(20)`` is 0.1 W).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np


class ScenarioError(ValueError):
    """A scenario field violates its invariant. ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def db(x: float) -> float:
    return 10.0 ** (x / 10.0)


def dbm(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def _vec(x) -> tuple[float, float]:
    a = tuple(float(v) for v in x)
    if len(a) != 2:
        raise ValueError("expected a 2-vector")
    return a


RICIAN_FIELDS = (
    "rician_ur", "rician_rg", "rician_re", "rician_ug", "rician_ue",
    "rician_gu", "rician_ru", "rician_gr", "rician_ge",
)


@dataclass(frozen=True)
class Scenario:
    # geometry (m)
    w_g: tuple[float, float] = (0.0, 120.0)
    w_e: tuple[float, float] = (200.0, 150.0)
    w_r: tuple[float, float] = (0.0, 0.0)
    z_u: float = 100.0
    z_r: float = 40.0
    q0: tuple[float, float] = (-500.0, 20.0)
    q_f: tuple[float, float] = (500.0, 20.0)
    # flight; desk scale keeps the full flight length but uses 40 coarse slots
    T: float = 124.0
    delta_t: float = 3.1
    v_max: float = 30.0
    # RIS
    Mx: int = 4
    Mz: int = 2
    d_over_lambda: float = 0.5
    # large-scale fading
    rho: float = db(-30.0)
    alpha: float = 2.2
    kappa: float = 3.3
    varsigma: float = 3.4
    sigma2: float = dbm(-80.0)
    # power budgets (W)
    P_bar: float = dbm(20.0)
    P_peak: float = 4 * dbm(20.0)
    G_bar: float = dbm(20.0)
    G_peak: float = 4 * dbm(20.0)
    # DL share of each slot
    w: float = 0.5
    # Rician factors (linear)
    rician_ur: float = db(3.0)
    rician_rg: float = db(3.0)
    rician_re: float = db(3.0)
    rician_ug: float = db(10.0)
    rician_ue: float = db(10.0)
    rician_gu: float = db(10.0)
    rician_ru: float = db(3.0)
    rician_gr: float = db(3.0)
    rician_ge: float = db(3.0)
    # CSI uncertainty and outer-loop control
    delta_a: float = math.sqrt(0.5)
    eps_c: float = 1e-3
    j_max: int = 40

    def __post_init__(self):
        for name in ("w_g", "w_e", "w_r", "q0", "q_f"):
            try:
                object.__setattr__(self, name, _vec(getattr(self, name)))
            except (TypeError, ValueError) as exc:
                raise ScenarioError(name, str(exc)) from None
        for name in ("Mx", "Mz", "j_max"):
            value = getattr(self, name)
            if float(value) != int(value):
                raise ScenarioError(name, f"must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        self.validate()

    # derived quantities
    @property
    def N(self) -> int:
        return int(round(self.T / self.delta_t))

    @property
    def D(self) -> float:
        return self.v_max * self.delta_t

    @property
    def M(self) -> int:
        return self.Mx * self.Mz

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    @classmethod
    def paper_scale(cls, **changes) -> "Scenario":
        """The full-size setup: 0.4 s slots (N = 310) and a 6 x 5 RIS."""
        base = dict(delta_t=0.4, Mx=6, Mz=5)
        base.update(changes)
        return cls(**base)

    def validate(self) -> None:
        for name, value in dataclasses.asdict(self).items():
            arr = np.asarray(value, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ScenarioError(name, "must be finite")
        if self.T <= 0:
            raise ScenarioError("T", "flight period must be positive")
        if self.delta_t <= 0:
            raise ScenarioError("delta_t", "slot length must be positive")
        if self.N < 1:
            raise ScenarioError("T", "T / delta_t must round to at least one slot")
        if abs(self.T / self.delta_t - self.N) > 1e-6 * max(1.0, self.N):
            raise ScenarioError("T", f"T / delta_t = {self.T / self.delta_t} is not an integer")
        if self.v_max <= 0:
            raise ScenarioError("v_max", "maximum speed must be positive")
        if self.Mx < 1:
            raise ScenarioError("Mx", "need at least one RIS column")
        if self.Mz < 1:
            raise ScenarioError("Mz", "need at least one RIS row")
        if self.d_over_lambda <= 0:
            raise ScenarioError("d_over_lambda", "element spacing must be positive")
        for name in ("rho", "sigma2", "alpha", "kappa", "varsigma"):
            if getattr(self, name) <= 0:
                raise ScenarioError(name, "must be positive")
        if not 0.0 <= self.w <= 1.0:
            raise ScenarioError("w", f"time-split weight must lie in [0, 1], got {self.w}")
        if self.P_bar < 0:
            raise ScenarioError("P_bar", "must be nonnegative")
        if self.P_peak < self.P_bar:
            raise ScenarioError("P_peak", "peak power below average power")
        if self.G_bar < 0:
            raise ScenarioError("G_bar", "must be nonnegative")
        if self.G_peak < self.G_bar:
            raise ScenarioError("G_peak", "peak power below average power")
        for name in RICIAN_FIELDS:
            if getattr(self, name) < 0:
                raise ScenarioError(name, "Rician factor must be nonnegative")
        if self.delta_a < 0:
            raise ScenarioError("delta_a", "must be nonnegative")
        if self.z_r <= 0:
            raise ScenarioError("z_r", "RIS must sit above ground")
        if self.z_u <= self.z_r:
            raise ScenarioError("z_u", "UAV must fly above the RIS")
        if np.hypot(*np.subtract(self.w_g, self.w_e)) == 0:
            raise ScenarioError("w_e", "eavesdropper coincides with the ground user")
        if self.eps_c <= 0:
            raise ScenarioError("eps_c", "must be positive")
        if self.j_max < 1:
            raise ScenarioError("j_max", "need at least one iteration")
        out_steps, back_steps = self.heuristic_leg_steps()
        if out_steps + back_steps > self.N:
            raise ScenarioError(
                "T",
                f"q0 -> w_g -> q_f needs {out_steps + back_steps} slots at v_max, only {self.N} available",
            )

    def heuristic_leg_steps(self) -> tuple[int, int]:
        """Slots needed to reach the user from q0 and to get from the user to q_f."""
        d_out = float(np.hypot(*np.subtract(self.w_g, self.q0)))
        d_back = float(np.hypot(*np.subtract(self.q_f, self.w_g)))
        return _ceil_steps(d_out, self.D), _ceil_steps(d_back, self.D)


def _ceil_steps(distance: float, step: float) -> int:
    # guard against 2.0000000001 steps from rounding
    return int(math.ceil(distance / step - 1e-12))


SCENARIO_FIELDS = tuple(f.name for f in dataclasses.fields(Scenario))
