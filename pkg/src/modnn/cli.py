"""`modnn` command line: simulate -> train -> audit -> control.

Each subcommand reads one flat config file, writes machine-readable outputs
into --out, and embeds the config hash in every file it produces. Commands
compose through files only; re-running a command with the same config and
seed reproduces its outputs byte for byte (wall-time fields are zeroed
unless deterministic_output is disabled).

Exit codes: 0 success, 2 config error, 3 training error, 4 file/integrity
error, 5 numerical or simulation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as cf
from . import consistency as cz
from . import control as ct
from .errors import (
    ActuationError,
    ConfigError,
    ContractError,
    DatasetError,
    IngestionError,
    IntegrityError,
    MetricError,
    ModnnError,
    OptimizerError,
    ShapeError,
    SimulationError,
    TrainingError,
)
from .frames import load_frame, save_frame
from .models import DynamicsModel
from .testbed import run_baseline
from .training import train
from .windows import train_val_split

EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_INTEGRITY = 4
EXIT_NUMERICAL = 5

_EXIT_BY_ERROR = (
    ((ConfigError,), EXIT_CONFIG),
    ((TrainingError, DatasetError), EXIT_TRAINING),
    ((IngestionError, IntegrityError), EXIT_INTEGRITY),
    ((SimulationError, OptimizerError, MetricError, ActuationError, ContractError, ShapeError), EXIT_NUMERICAL),
)


def _prepare(args) -> tuple[dict, str, Path]:
    cfg = cf.load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = cf.config_hash(cfg)
    (out / "config_used.cfg").write_text(
        f"# config_hash = {chash}\n" + cf.render_config(cfg), encoding="utf-8"
    )
    return cfg, chash, out


def _simulate_frame(cfg: dict):
    return run_baseline(
        days=cfg["sim.days"],
        seed=cfg["seed"],
        rc=cf.rc_params(cfg),
        hvac=cf.hvac_params(cfg),
        sched=cf.schedule_policy(cfg),
        wx=cf.weather_config(cfg),
        t_init=cfg["sim.t_init"],
    )


def cmd_simulate(args) -> int:
    cfg, chash, out = _prepare(args)
    frame = _simulate_frame(cfg)
    save_frame(frame, out / "frame.csv", comment=f"config_hash = {chash}")
    print(f"simulate: wrote {len(frame)} rows to {out / 'frame.csv'} (hash {chash})")
    return 0


def _load_split(cfg: dict, frame):
    return train_val_split(
        frame,
        train_days=cfg["split.train_days"],
        val_days=cfg["split.val_days"],
        L=cfg["model.l_steps"],
        M=cfg["model.m_steps"],
        train_stride=cfg["train.stride"],
        val_stride=cfg["train.val_stride"],
    )


def cmd_train(args) -> int:
    cfg, chash, out = _prepare(args)
    frame = load_frame(args.frame) if args.frame else _simulate_frame(cfg)
    train_set, val_set = _load_split(cfg, frame)
    zero_wall = cfg["deterministic_output"]
    for variant in cf.variants(cfg):
        model, report = train(
            variant, train_set, val_set, cf.train_hyper(cfg), cf.model_config(cfg, variant)
        )
        model.save(out / f"checkpoint_{variant}.json", extra_meta={"config_hash": chash})
        (out / f"train_report_{variant}.json").write_text(
            report.to_json(zero_wall_time=zero_wall), encoding="utf-8"
        )
        (out / f"train_curve_{variant}.csv").write_text(
            f"# config_hash = {chash}\n" + report.to_curve_csv(), encoding="utf-8"
        )
        final = report.val_mse[-1] if report.val_mse else float("nan")
        print(
            f"train[{variant}]: {len(report.train_mse)} epochs, "
            f"val_mse {final:.4f}, mae {report.final_mae:.3f} C -> {out}"
        )
    return 0


def cmd_audit(args) -> int:
    cfg, chash, out = _prepare(args)
    model = DynamicsModel.load(args.checkpoint[0])
    frame = load_frame(args.frame) if args.frame else _simulate_frame(cfg)
    _, val_set = _load_split(cfg, frame)
    wins = val_set.windows()[: cfg["consistency.n_report_windows"]]
    report, p_raw, q_raw = cz.full_report(
        model, wins, frame, cf.consistency_settings(cfg), config_hash=chash
    )
    (out / "consistency_report.json").write_text(report.to_json(), encoding="utf-8")
    cz.save_pairs_csv(out / "response_pairs.csv", p_raw, q_raw)
    print(
        f"audit[{report.variant}]: mae {report.mae:.3f} C, trv ({report.trv_plus:.3f}, "
        f"{report.trv_minus:.3f}) C h, jac_min {report.jacobian_min:.2e}, mmd {report.mmd:.4f}"
    )
    return 0


def cmd_control(args) -> int:
    cfg, chash, out = _prepare(args)
    setup = cf.control_setup(cfg)
    entries: dict[str, dict] = {}
    for path in args.checkpoint:
        stem = Path(path).stem
        try:
            model = DynamicsModel.load(path)
            name = stem.replace("checkpoint_", "") or model.variant
            entries[name] = {"controller": "mpc", "model": model}
            continue
        except IntegrityError:
            pass
        net = ct.ControlLawNet.load(path)
        entries[stem.replace("policy_", "") or "policy"] = {"controller": "policy", "policy": net}
    frames, metrics = ct.compare_controllers(
        entries,
        setup,
        cfg["seed"],
        rc=cf.rc_params(cfg),
        hvac=cf.hvac_params(cfg),
        sched=cf.schedule_policy(cfg),
        wx=cf.weather_config(cfg),
    )
    for name, frame in frames.items():
        save_frame(frame, out / f"control_{name}.csv", comment=f"config_hash = {chash}")
    (out / "control_metrics.json").write_text(
        ct.metrics_to_json(metrics, config_hash=chash, zero_wall_time=cfg["deterministic_output"]),
        encoding="utf-8",
    )
    for name, m in metrics.items():
        extra = (
            f", peak_reduction {m['peak_reduction_pct']:.1f}%"
            if "peak_reduction_pct" in m
            else ""
        )
        print(f"control[{name}]: violation {m['violation_ch']:.3f} C h{extra}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modnn",
        description="Building thermal dynamics: testbed, constrained models, audits, MPC.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, frame=False, checkpoint=False):
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if frame:
            p.add_argument("--frame", default=None, help="frame CSV (default: simulate per config)")
        if checkpoint:
            p.add_argument(
                "--checkpoint", action="append", required=True, help="model checkpoint (repeatable)"
            )

    common(sub.add_parser("simulate", help="run the on-off baseline testbed"))
    common(sub.add_parser("train", help="train the configured model variant(s)"), frame=True)
    common(sub.add_parser("audit", help="physical-consistency report for a checkpoint"), frame=True, checkpoint=True)
    common(sub.add_parser("control", help="closed-loop comparison against the baseline"), checkpoint=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "simulate": cmd_simulate,
        "train": cmd_train,
        "audit": cmd_audit,
        "control": cmd_control,
    }[args.command]
    try:
        return handler(args)
    except ModnnError as e:
        print(f"error: {e}", file=sys.stderr)
        for classes, code in _EXIT_BY_ERROR:
            if isinstance(e, classes):
                return code
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
