"""Desk-scale thermal testbed: one RC zone, synthetic weather, stochastic
occupancy schedules, and an on-off baseline controller, all at 15-minute
steps.

Physics: a single lumped capacitance C_zone driven by four flux channels,

    C_zone * dT/dt = (t_out - T)/R_env + a_solar*solar
                     + q_person*occ + q_base + u_hvac

integrated with explicit Euler at 900 s. u_hvac is the signed thermal power
delivered to the zone (negative while cooling), so dT'/du_hvac = dt/C_zone
is positive for heating and cooling alike: the ground-truth monotone
response the learned models are audited against.

The baseline controller is an on-off thermostat with hysteresis: cooling
switches on above setpoint + deadband/2, off below setpoint - deadband/2,
and holds its previous state inside the band. The setpoint tracks the
occupancy schedule (occupied 24 C, unoccupied 32 C).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Callable

import numpy as np

from .errors import ActuationError, ConfigError, SimulationError
from .frames import STEP_SECONDS, TimeSeriesFrame

DEFAULT_START = datetime(2021, 6, 1)


@dataclass
class RCParams:
    """Lumped single-zone thermal parameters.

    c_zone    zone thermal capacitance, J/C (air plus lumped envelope mass)
    r_env     envelope resistance to outdoors, C/W
    a_solar   effective solar aperture, m^2
    q_person  sensible gain per occupant, W
    q_base    constant plug/light gain, W
    """

    c_zone: float = 2.5e6
    r_env: float = 0.01
    a_solar: float = 1.0
    q_person: float = 100.0
    q_base: float = 250.0

    def validate(self, dt: float = STEP_SECONDS) -> "RCParams":
        for name in ("c_zone", "r_env", "a_solar", "q_person", "q_base"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"rc.{name} must be strictly positive")
        # explicit Euler stability guard for the envelope time constant
        if dt / (self.r_env * self.c_zone) >= 0.5:
            raise ConfigError(
                "rc parameters unstable for explicit Euler: need dt/(r_env*c_zone) < 0.5"
            )
        return self


@dataclass
class HvacParams:
    """Single-coil cooling system: thermal power follows supply air flow."""

    t_supply: float = 13.0
    flow_max: float = 0.16  # m^3/s
    rho_air: float = 1.2  # kg/m^3
    cp_air: float = 1005.0  # J/(kg C)
    cop: float = 3.0

    def validate(self) -> "HvacParams":
        for name in ("flow_max", "rho_air", "cp_air", "cop"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"hvac.{name} must be strictly positive")
        return self

    def power_at(self, flow: float, t_zone: float) -> float:
        return flow * self.rho_air * self.cp_air * (self.t_supply - t_zone)

    def max_cooling(self, t_zone: float) -> float:
        """Most negative thermal power available at the given zone temp."""
        return self.power_at(self.flow_max, t_zone)


@dataclass
class SchedulePolicy:
    """Thermostat setpoints and the stochastic away window.

    Occupants are home outside [depart, arrive); each day draws
    depart ~ U(depart window) and arrive ~ U(arrive window), snapped to the
    15-minute grid.
    """

    setpoint_occupied: float = 24.0
    setpoint_unoccupied: float = 32.0
    deadband: float = 0.5
    depart_window: tuple[float, float] = (7.0, 10.0)
    arrive_window: tuple[float, float] = (16.0, 20.0)
    peak_window: tuple[float, float] = (15.0, 18.0)
    occupants: int = 3

    def validate(self) -> "SchedulePolicy":
        if self.deadband <= 0:
            raise ConfigError("sched.deadband must be positive")
        d0, d1 = self.depart_window
        a0, a1 = self.arrive_window
        if not (0 <= d0 < d1 <= 24 and 0 <= a0 < a1 <= 24):
            raise ConfigError("sched depart/arrive windows must be ordered within a day")
        if d1 > a0:
            raise ConfigError("sched depart window must end before arrive window starts")
        if self.occupants < 1:
            raise ConfigError("sched.occupants must be at least 1")
        return self


@dataclass
class WeatherConfig:
    """Synthetic summer weather: diurnal sinusoid plus bounded noise."""

    t_mean: float = 26.0
    t_amp: float = 8.0
    t_peak_hour: float = 15.0
    t_noise: float = 0.75  # uniform half-width, C
    solar_peak: float = 800.0  # W/m^2
    sunrise: float = 6.0
    sunset: float = 20.0
    solar_noise_frac: float = 0.1


# ---------------------------------------------------------------------------
# elemental operations


def rc_step(
    t_zone: float,
    t_out: float,
    solar: float,
    occ: float,
    u_hvac: float,
    rc: RCParams,
    dt: float = STEP_SECONDS,
) -> float:
    """Advance the zone one step; strictly increasing in u_hvac."""
    vals = (t_zone, t_out, solar, occ, u_hvac)
    if not all(math.isfinite(v) for v in vals):
        raise SimulationError(f"non-finite simulation input: {vals}")
    flux = (t_out - t_zone) / rc.r_env + rc.a_solar * solar + rc.q_person * occ + rc.q_base + u_hvac
    return t_zone + dt / rc.c_zone * flux


def hvac_from_flow(flow: float, t_zone: float, hvac: HvacParams) -> float:
    """Thermal power from supply flow; non-positive whenever the zone is
    warmer than the supply air."""
    if not (0.0 <= flow <= hvac.flow_max * (1 + 1e-12)):
        raise ActuationError(f"flow {flow} outside [0, {hvac.flow_max}]")
    return hvac.power_at(min(flow, hvac.flow_max), t_zone)


def flow_from_power(u_hvac: float, t_zone: float, hvac: HvacParams) -> float:
    """Flow realizing a requested thermal power, clipped to the actuator.

    Near t_zone = t_supply no meaningful cooling is possible; returns 0 flow.
    """
    dt_coil = hvac.t_supply - t_zone
    if dt_coil >= -1e-9:
        return 0.0
    flow = u_hvac / (hvac.rho_air * hvac.cp_air * dt_coil)
    return float(np.clip(flow, 0.0, hvac.flow_max))


def onoff_controller(t_zone: float, setpoint: float, deadband: float, prev_on: bool) -> bool:
    """Hysteresis thermostat decision; never switches inside the deadband."""
    if t_zone > setpoint + deadband / 2.0:
        return True
    if t_zone < setpoint - deadband / 2.0:
        return False
    return prev_on


# ---------------------------------------------------------------------------
# disturbance generation


def draw_schedule_times(days: int, rng: np.random.Generator, sched: SchedulePolicy):
    """Per-day (depart, arrive) hours, uniform in their windows."""
    depart = rng.uniform(*sched.depart_window, size=days)
    arrive = rng.uniform(*sched.arrive_window, size=days)
    return depart, arrive


def occupancy_schedule(days: int, seed, sched: SchedulePolicy | None = None) -> np.ndarray:
    """Occupant count per 15-minute step; away between depart and arrive."""
    sched = sched or SchedulePolicy()
    rng = np.random.default_rng(seed)
    depart, arrive = draw_schedule_times(days, rng, sched)
    spd = int(round(86400.0 / STEP_SECONDS))
    occ = np.full(days * spd, float(sched.occupants))
    for d in range(days):
        i0 = d * spd + int(round(depart[d] * spd / 24.0))
        i1 = d * spd + int(round(arrive[d] * spd / 24.0))
        occ[i0:i1] = 0.0
    return occ


def synth_weather(days: int, seed, wx: WeatherConfig | None = None):
    """(t_out, solar) channels: diurnal sinusoid and clipped daylight half-sine."""
    wx = wx or WeatherConfig()
    rng = np.random.default_rng(seed)
    spd = int(round(86400.0 / STEP_SECONDS))
    n = days * spd
    hour = (np.arange(n) * STEP_SECONDS / 3600.0) % 24.0
    phase = 2.0 * np.pi * (hour - (wx.t_peak_hour - 6.0)) / 24.0
    t_out = wx.t_mean + wx.t_amp * np.sin(phase) + rng.uniform(-wx.t_noise, wx.t_noise, size=n)
    day_len = wx.sunset - wx.sunrise
    up = (hour > wx.sunrise) & (hour < wx.sunset)
    solar = np.zeros(n)
    base = np.sin(np.pi * (hour[up] - wx.sunrise) / day_len)
    jitter = 1.0 + wx.solar_noise_frac * rng.uniform(-1.0, 1.0, size=up.sum())
    solar[up] = np.maximum(0.0, wx.solar_peak * base * jitter)
    return t_out, solar


def make_disturbances(days: int, seed, sched: SchedulePolicy, wx: WeatherConfig):
    """Weather + occupancy from one master seed (deterministic split)."""
    w_ss, o_ss = np.random.SeedSequence(seed).spawn(2)
    t_out, solar = synth_weather(days, w_ss, wx)
    occ = occupancy_schedule(days, o_ss, sched)
    return t_out, solar, occ


# ---------------------------------------------------------------------------
# closed-loop simulation


def simulate(
    n_steps: int,
    t_out: np.ndarray,
    solar: np.ndarray,
    occ: np.ndarray,
    controller: Callable[[int, float], float],
    rc: RCParams,
    hvac: HvacParams,
    t_init: float = 26.0,
    start: datetime = DEFAULT_START,
) -> TimeSeriesFrame:
    """Run `controller(step, t_zone) -> flow` against the RC zone.

    Row i logs the zone state at the start of interval i and the inputs
    applied during it; t_zone[i+1] is the Euler update of row i.
    """
    rc.validate()
    hvac.validate()
    t = float(t_init)
    log_u = np.zeros(n_steps)
    log_p = np.zeros(n_steps)
    log_t = np.zeros(n_steps)
    for i in range(n_steps):
        flow = controller(i, t)
        u = hvac_from_flow(flow, t, hvac)
        log_t[i] = t
        log_u[i] = u
        log_p[i] = abs(u) / hvac.cop
        t = rc_step(t, t_out[i], solar[i], occ[i], u, rc)
    return TimeSeriesFrame(
        start=start,
        step_s=STEP_SECONDS,
        t_out=t_out[:n_steps].copy(),
        solar=solar[:n_steps].copy(),
        occ=occ[:n_steps].copy(),
        u_hvac=log_u,
        p_elec=log_p,
        t_zone=log_t,
    )


def run_baseline(
    days: int,
    seed,
    rc: RCParams | None = None,
    hvac: HvacParams | None = None,
    sched: SchedulePolicy | None = None,
    wx: WeatherConfig | None = None,
    t_init: float = 26.0,
    start: datetime = DEFAULT_START,
) -> TimeSeriesFrame:
    """On-off thermostat against the RC zone for `days` days."""
    rc = (rc or RCParams()).validate()
    hvac = (hvac or HvacParams()).validate()
    sched = (sched or SchedulePolicy()).validate()
    wx = wx or WeatherConfig()
    t_out, solar, occ = make_disturbances(days, seed, sched, wx)
    state = {"on": False}

    def controller(i: int, t_zone: float) -> float:
        setpoint = sched.setpoint_occupied if occ[i] > 0 else sched.setpoint_unoccupied
        state["on"] = onoff_controller(t_zone, setpoint, sched.deadband, state["on"])
        return hvac.flow_max if state["on"] else 0.0

    return simulate(days * 96, t_out, solar, occ, controller, rc, hvac, t_init, start)


def flux_balance(frame: TimeSeriesFrame, rc: RCParams) -> tuple[np.ndarray, np.ndarray]:
    """(observed, expected) per-step dT*C/dt for energy-balance checks."""
    dt = frame.step_s
    observed = np.diff(frame.t_zone) * rc.c_zone / dt
    expected = (
        (frame.t_out - frame.t_zone) / rc.r_env
        + rc.a_solar * frame.solar
        + rc.q_person * frame.occ
        + rc.q_base
        + frame.u_hvac
    )[:-1]
    return observed, expected
