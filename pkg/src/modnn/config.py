"""Flat key = value experiment configs.

One text file drives every command: simulation physics, schedules, model
sizes, training hyperparameters, audit settings, and control settings. The
format is diff-friendly on purpose: one `key = value` per line, `#` comments,
no nesting. Unknown keys are rejected by name; `seed` is the only required
key. The canonical rendering (sorted keys) is hashed and the hash is embedded
in every output file, so any artifact can be traced to its exact settings.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .consistency import ConsistencySettings
from .control import ControlSetup
from .errors import ConfigError
from .models import ModelConfig
from .testbed import HvacParams, RCParams, SchedulePolicy, WeatherConfig
from .training import TrainHyper

# key -> default; None marks a required key. Types are inferred from the
# defaults (bool before int: bool is an int subclass).
DEFAULTS: dict = {
    "seed": None,
    "deterministic_output": True,
    "sim.days": 92,
    "sim.t_init": 26.0,
    "split.train_days": 70,
    "split.val_days": 20,
    "rc.c_zone": 2.5e6,
    "rc.r_env": 0.01,
    "rc.a_solar": 1.0,
    "rc.q_person": 100.0,
    "rc.q_base": 250.0,
    "hvac.t_supply": 13.0,
    "hvac.flow_max": 0.16,
    "hvac.rho_air": 1.2,
    "hvac.cp_air": 1005.0,
    "hvac.cop": 3.0,
    "sched.setpoint_occupied": 24.0,
    "sched.setpoint_unoccupied": 32.0,
    "sched.deadband": 0.5,
    "sched.depart_earliest": 7.0,
    "sched.depart_latest": 10.0,
    "sched.arrive_earliest": 16.0,
    "sched.arrive_latest": 20.0,
    "sched.peak_start": 15.0,
    "sched.peak_end": 18.0,
    "sched.occupants": 3,
    "weather.t_mean": 26.0,
    "weather.t_amp": 8.0,
    "weather.t_peak_hour": 15.0,
    "weather.t_noise": 0.75,
    "weather.solar_peak": 800.0,
    "weather.sunrise": 6.0,
    "weather.sunset": 20.0,
    "weather.solar_noise_frac": 0.1,
    "model.variant": "modnn",
    "model.l_steps": 96,
    "model.m_steps": 96,
    "model.hidden": 16,
    "model.flux_width": 4,
    "model.u_low": -6000.0,
    "model.u_high": 0.0,
    "train.epochs": 50,
    "train.lr": 1e-3,
    "train.batch": 32,
    "train.stride": 4,
    "train.val_stride": 8,
    "train.trv_monitor_windows": 8,
    "consistency.u_floor": -4000.0,
    "consistency.u_ceiling": 0.0,
    "consistency.n_trv_windows": 128,
    "consistency.n_jacobian_windows": 128,
    "consistency.n_report_windows": 200,
    "consistency.pq_windows": 64,
    "consistency.pq_pairs": 512,
    "consistency.excitation_hold": 4,
    "consistency.sigma_policy": "median",
    "control.days": 3,
    "control.metric_start_day": 2,
    "control.band_occ_low": 22.0,
    "control.band_occ_high": 24.5,
    "control.band_unocc_low": 16.0,
    "control.band_unocc_high": 33.0,
    "control.price_offpeak": 1.0,
    "control.price_peak": 5.0,
    "control.u_low": -2122.56,
    "control.u_high": 0.0,
    "control.w_obj": 1.0,
    "control.w_input": 1000.0,
    "control.w_comfort": 1000.0,
    "control.iters_first": 200,
    "control.iters_recede": 40,
    "control.lr": 150.0,
    "control.lr_decay": 0.995,
}

_TYPES: dict = {"seed": int}
for _k, _v in DEFAULTS.items():
    if _v is not None:
        _TYPES[_k] = type(_v)


def _parse_value(key: str, raw: str):
    want = _TYPES[key]
    raw = raw.strip()
    try:
        if want is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if want is int:
            return int(raw)
        if want is float:
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {want.__name__}") from e


def parse_config(text: str) -> dict:
    """Parse and validate; unknown keys and missing required keys are errors."""
    cfg = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        cfg[key] = _parse_value(key, raw)
    missing = [k for k, v in cfg.items() if v is None]
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: dict) -> None:
    if cfg["hvac.t_supply"] >= cfg["sched.setpoint_occupied"]:
        raise ConfigError("hvac.t_supply must be below sched.setpoint_occupied")
    if cfg["split.train_days"] + cfg["split.val_days"] > cfg["sim.days"]:
        raise ConfigError("split.train_days + split.val_days exceeds sim.days")
    if cfg["control.metric_start_day"] >= cfg["control.days"]:
        raise ConfigError("control.metric_start_day must be before control.days")


def load_config(path) -> dict:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def render_config(cfg: dict) -> str:
    lines = []
    for key in sorted(cfg):
        v = cfg[key]
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(render_config(cfg).encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# typed views


def rc_params(cfg: dict) -> RCParams:
    return RCParams(
        c_zone=cfg["rc.c_zone"],
        r_env=cfg["rc.r_env"],
        a_solar=cfg["rc.a_solar"],
        q_person=cfg["rc.q_person"],
        q_base=cfg["rc.q_base"],
    ).validate()


def hvac_params(cfg: dict) -> HvacParams:
    return HvacParams(
        t_supply=cfg["hvac.t_supply"],
        flow_max=cfg["hvac.flow_max"],
        rho_air=cfg["hvac.rho_air"],
        cp_air=cfg["hvac.cp_air"],
        cop=cfg["hvac.cop"],
    ).validate()


def schedule_policy(cfg: dict) -> SchedulePolicy:
    return SchedulePolicy(
        setpoint_occupied=cfg["sched.setpoint_occupied"],
        setpoint_unoccupied=cfg["sched.setpoint_unoccupied"],
        deadband=cfg["sched.deadband"],
        depart_window=(cfg["sched.depart_earliest"], cfg["sched.depart_latest"]),
        arrive_window=(cfg["sched.arrive_earliest"], cfg["sched.arrive_latest"]),
        peak_window=(cfg["sched.peak_start"], cfg["sched.peak_end"]),
        occupants=cfg["sched.occupants"],
    ).validate()


def weather_config(cfg: dict) -> WeatherConfig:
    return WeatherConfig(
        t_mean=cfg["weather.t_mean"],
        t_amp=cfg["weather.t_amp"],
        t_peak_hour=cfg["weather.t_peak_hour"],
        t_noise=cfg["weather.t_noise"],
        solar_peak=cfg["weather.solar_peak"],
        sunrise=cfg["weather.sunrise"],
        sunset=cfg["weather.sunset"],
        solar_noise_frac=cfg["weather.solar_noise_frac"],
    )


def model_config(cfg: dict, variant: str) -> ModelConfig:
    return ModelConfig(
        variant=variant,
        L=cfg["model.l_steps"],
        M=cfg["model.m_steps"],
        hidden=cfg["model.hidden"],
        flux_width=cfg["model.flux_width"],
        u_low=cfg["model.u_low"],
        u_high=cfg["model.u_high"],
    )


def train_hyper(cfg: dict) -> TrainHyper:
    return TrainHyper(
        epochs=cfg["train.epochs"],
        lr=cfg["train.lr"],
        batch=cfg["train.batch"],
        seed=cfg["seed"],
        trv_monitor_windows=cfg["train.trv_monitor_windows"],
        trv_u_floor=cfg["consistency.u_floor"],
        trv_u_ceiling=cfg["consistency.u_ceiling"],
    )


def consistency_settings(cfg: dict) -> ConsistencySettings:
    return ConsistencySettings(
        u_floor=cfg["consistency.u_floor"],
        u_ceiling=cfg["consistency.u_ceiling"],
        n_trv_windows=cfg["consistency.n_trv_windows"],
        n_jacobian_windows=cfg["consistency.n_jacobian_windows"],
        pq_windows=cfg["consistency.pq_windows"],
        pq_pairs=cfg["consistency.pq_pairs"],
        excitation_hold=cfg["consistency.excitation_hold"],
        sigma_policy=cfg["consistency.sigma_policy"],
        seed=cfg["seed"],
    )


def control_setup(cfg: dict) -> ControlSetup:
    return ControlSetup(
        days=cfg["control.days"],
        metric_start_day=cfg["control.metric_start_day"],
        band_occupied=(cfg["control.band_occ_low"], cfg["control.band_occ_high"]),
        band_unoccupied=(cfg["control.band_unocc_low"], cfg["control.band_unocc_high"]),
        price_offpeak=cfg["control.price_offpeak"],
        price_peak=cfg["control.price_peak"],
        u_low=cfg["control.u_low"],
        u_high=cfg["control.u_high"],
        w_obj=cfg["control.w_obj"],
        w_input=cfg["control.w_input"],
        w_comfort=cfg["control.w_comfort"],
        iters_first=cfg["control.iters_first"],
        iters_recede=cfg["control.iters_recede"],
        lr=cfg["control.lr"],
        lr_decay=cfg["control.lr_decay"],
    )


def variants(cfg: dict) -> list[str]:
    names = [v.strip() for v in cfg["model.variant"].split(",") if v.strip()]
    for v in names:
        if v not in ("modnn", "lstm"):
            raise ConfigError(f"model.variant: unknown variant {v!r}")
    if not names:
        raise ConfigError("model.variant is empty")
    return names
