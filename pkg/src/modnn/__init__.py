"""Physics-constrained building thermal dynamics: models, audits, control.

The package covers the full loop at desk scale:

    testbed      an RC thermal zone with synthetic weather, stochastic
                 occupancy, and an on-off baseline thermostat
    models       a modularized network whose HVAC-to-temperature pathway is
                 strictly positive by construction, an unconstrained LSTM
                 baseline, and diagnostic toy models
    training     windowed MSE training with a response-violation monitor
    consistency  TRV, Jacobian-sign, and MMD audits fused into one report
    control      an MPC-style loss, gradient planning through a frozen
                 model, a squashed control-law network, and the closed loop
    cli          the `modnn` command line gluing everything together

See README.md for formats and the demos/ directory for narrative scripts.
"""

from .consistency import (
    ConsistencyReport,
    ConsistencySettings,
    PqSettings,
    build_pq,
    full_report,
    gaussian_kernel,
    jacobian_min,
    mae_mape,
    mmd,
    mmd2,
    trv,
)
from .control import (
    ControlLawNet,
    ControlPlan,
    ControlScenario,
    ControlSetup,
    MpcLossConfig,
    OptSettings,
    PolicyHyper,
    band_schedule,
    closed_loop,
    compare_controllers,
    mpc_loss,
    optimize_controls,
    peak_load_reduction,
    price_schedule,
    temp_violation,
    train_control_law,
)
from .frames import TimeSeriesFrame, load_frame, save_frame
from .models import (
    ConstantModel,
    DynamicsModel,
    LinearResponseModel,
    ModelConfig,
    RcOracleModel,
    forward,
    hvac_jacobian,
    override_hvac,
)
from .testbed import (
    HvacParams,
    RCParams,
    SchedulePolicy,
    WeatherConfig,
    hvac_from_flow,
    occupancy_schedule,
    onoff_controller,
    rc_step,
    run_baseline,
    synth_weather,
)
from .training import TrainHyper, TrainReport, train
from .windows import NormStats, PredictionWindow, WindowDataset, build_windows, train_val_split

__version__ = "0.1.0"

__all__ = [
    "ConsistencyReport",
    "ConsistencySettings",
    "ConstantModel",
    "ControlLawNet",
    "ControlPlan",
    "ControlScenario",
    "ControlSetup",
    "DynamicsModel",
    "HvacParams",
    "LinearResponseModel",
    "ModelConfig",
    "MpcLossConfig",
    "NormStats",
    "OptSettings",
    "PolicyHyper",
    "PqSettings",
    "PredictionWindow",
    "RCParams",
    "RcOracleModel",
    "SchedulePolicy",
    "TimeSeriesFrame",
    "TrainHyper",
    "TrainReport",
    "WeatherConfig",
    "WindowDataset",
    "band_schedule",
    "build_pq",
    "build_windows",
    "closed_loop",
    "compare_controllers",
    "forward",
    "full_report",
    "gaussian_kernel",
    "hvac_from_flow",
    "hvac_jacobian",
    "jacobian_min",
    "load_frame",
    "mae_mape",
    "mmd",
    "mmd2",
    "mpc_loss",
    "occupancy_schedule",
    "onoff_controller",
    "optimize_controls",
    "override_hvac",
    "peak_load_reduction",
    "price_schedule",
    "rc_step",
    "run_baseline",
    "save_frame",
    "synth_weather",
    "temp_violation",
    "train",
    "train_control_law",
    "train_val_split",
    "trv",
]
