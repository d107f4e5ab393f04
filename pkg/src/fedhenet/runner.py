"""In-process experiment runner: hosts the coordinator and all client threads
over a loopback bus, counts every byte at the transport boundary, and emits
the report artifacts.  The CLI is a thin wrapper around this module."""

from __future__ import annotations

import threading
import time
import uuid
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, run_baseline
from .config import ExperimentConfig
from .data import load_femb, partition
from .errors import ConfigError, TransportError
from .federation.protocol import RoundConfig, client_run, coordinator_run
from .federation.transport import LoopbackBus
from .he.context import (
    ROLE_CLIENT,
    ROLE_COORDINATOR,
    EncryptionContext,
)
from .metrics import ByteLedger, CountingTransport, RunReport, emit_report
from .rolann import compute_client_update, predict

DIRECTION_UP = "up"  # client -> coordinator
DIRECTION_DOWN = "down"  # coordinator -> clients


def _dataset_id(cfg: ExperimentConfig) -> str:
    return Path(cfg.train_path).stem


def _make_contexts(cfg: ExperimentConfig):
    """One client context per participant plus a secretless coordinator view."""
    if not cfg.he_enabled:
        return None, None
    if cfg.he_backend == "mock":
        client_ctx = EncryptionContext.mock(role=ROLE_CLIENT)
        coord_ctx = EncryptionContext.mock(role=ROLE_COORDINATOR)
        return client_ctx, coord_ctx
    client_ctx = EncryptionContext.from_key_file(cfg.key_file, role=ROLE_CLIENT)
    if client_ctx.secret_key is None:
        raise ConfigError(f"key file {cfg.key_file!r} holds no secret key; clients need one")
    coord_ctx = EncryptionContext.from_key_file(cfg.key_file, role=ROLE_COORDINATOR)
    return client_ctx, coord_ctx


def run_fedhenet_round(cfg: ExperimentConfig, train, test, plan):
    """One federated round over loopback; returns a finished RunReport plus
    the byte ledger (so callers can persist the message log)."""
    d = train.n_features + (1 if cfg.include_bias else 0)
    client_ctx, coord_ctx = _make_contexts(cfg)
    if client_ctx is not None and client_ctx.slot_count < d:
        raise ConfigError(
            f"HE slot count {client_ctx.slot_count} is smaller than the "
            f"augmented feature dimension {d}; use a larger ring degree"
        )

    round_cfg = RoundConfig(
        expected_clients=cfg.clients,
        round_id=cfg.round_id,
        timeout=cfg.timeout,
        he_enabled=cfg.he_enabled,
        lam=cfg.lam,
        epsilon=cfg.epsilon,
        activation=cfg.activation,
        include_bias=cfg.include_bias,
    )
    bus = LoopbackBus()
    ledger = ByteLedger()
    client_sets = [train.subset(idx) for idx in plan.assignments]

    results = {}
    errors = {}

    def client_main(k: int):
        transport = CountingTransport(bus.transport(), ledger, DIRECTION_UP)
        try:
            results[k] = client_run(client_sets[k], round_cfg, client_ctx, transport, k)
        except Exception as exc:  # surfaced after join
            errors[k] = exc

    t_start = time.monotonic()
    coord_transport = CountingTransport(bus.transport(), ledger, DIRECTION_DOWN)
    coord_box = {}
    ready = threading.Event()

    def coord_main():
        try:
            coord_box["summary"] = coordinator_run(
                round_cfg, coord_ctx, coord_transport, ready=ready
            )
        except Exception as exc:
            coord_box["error"] = exc
            ready.set()

    coord_thread = threading.Thread(target=coord_main, daemon=True)
    coord_thread.start()
    ready.wait(cfg.timeout)  # clients must not publish before the subscription is live
    threads = [
        threading.Thread(target=client_main, args=(k,), daemon=True) for k in range(cfg.clients)
    ]
    for t in threads:
        t.start()
    coord_thread.join(timeout=cfg.timeout)
    for t in threads:
        t.join(timeout=cfg.timeout)
    if "error" in coord_box:
        raise coord_box["error"]
    summary = coord_box.get("summary")
    if summary is None:
        raise TransportError("coordinator did not finish within the timeout")
    wall = time.monotonic() - t_start
    if errors:
        k, exc = sorted(errors.items())[0]
        raise TransportError(f"client {k} failed: {exc}") from exc
    if not summary.ok:
        raise TransportError(f"round failed: {summary.reason}")

    model = results[0].model
    acc = float((predict(model, test.data) == test.labels).mean())

    inflation = 0.0
    overhead_ms = 0.0
    if cfg.he_enabled:
        inflation = client_ctx.ciphertext_bytes(d) / (d * 8)
        hp_plain = round_cfg.hyper_params()
        plain_ms = []
        for k, ds in enumerate(client_sets):
            t0 = time.monotonic()
            compute_client_update(ds, hp_plain, encryptor=None, client_id=k)
            plain_ms.append(1000.0 * (time.monotonic() - t0))
        he_ms = [
            1000.0 * (results[k].timings["compute_s"] + results[k].timings["decrypt_s"])
            for k in range(cfg.clients)
        ]
        overhead_ms = max(0.0, float(np.mean(he_ms) - np.mean(plain_ms)))

    bytes_up = ledger.bytes_for(direction=DIRECTION_UP)
    bytes_down = ledger.bytes_for(direction=DIRECTION_DOWN)
    report = RunReport(
        run_id=uuid.uuid4().hex[:12],
        algorithm="fedhenet",
        dataset_id=_dataset_id(cfg),
        clients=cfg.clients,
        partition=cfg.partition.scheme.value,
        lam=cfg.lam,
        epsilon=cfg.epsilon,
        activation=cfg.activation.value,
        he_enabled=cfg.he_enabled,
        total_bytes_up=bytes_up,
        total_bytes_down=bytes_down,
        accuracy=acc,
        wall_seconds={"round": wall, **{k: v for k, v in summary.timings.items()}},
        inflation_ratio=inflation,
        he_overhead_ms_per_client=overhead_ms,
        curve=[
            {
                "round": 1,
                "accuracy": acc,
                "cum_bytes": bytes_up + bytes_down,
                "cum_seconds": wall,
            }
        ],
        alpha=_alpha_label(cfg),
    )
    return report, ledger


def _alpha_label(cfg: ExperimentConfig) -> str:
    if cfg.partition.scheme.value == "dirichlet":
        return f"{cfg.partition.alpha:g}"
    return "-"


def run_baseline_experiment(cfg: ExperimentConfig, train, test, plan) -> RunReport:
    bl_cfg = BaselineConfig(
        algorithm=cfg.algorithm,
        mu=cfg.mu,
        rounds=cfg.rounds,
        local_epochs=cfg.local_epochs,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        include_bias=cfg.include_bias,
    )
    t0 = time.monotonic()
    history = run_baseline(train, test, plan, bl_cfg)
    wall = time.monotonic() - t0
    last = history[-1]
    return RunReport(
        run_id=uuid.uuid4().hex[:12],
        algorithm=cfg.algorithm,
        dataset_id=_dataset_id(cfg),
        clients=cfg.clients,
        partition=cfg.partition.scheme.value,
        lam=cfg.lam,
        epsilon=cfg.epsilon,
        activation="softmax",
        he_enabled=False,
        total_bytes_up=last["cum_bytes"] // 2,
        total_bytes_down=last["cum_bytes"] - last["cum_bytes"] // 2,
        accuracy=last["accuracy"],
        wall_seconds={"train": wall},
        curve=history,
        alpha=_alpha_label(cfg),
    )


def run_experiment(cfg: ExperimentConfig, outdir=None) -> dict:
    """Load data, partition, run the configured algorithm, and write the
    report artifacts.  Returns the paths written plus the report object."""
    outdir = Path(outdir if outdir is not None else cfg.output_dir)
    train = load_femb(cfg.train_path)
    test = load_femb(cfg.test_path)
    if train.n_features != test.n_features or train.n_classes != test.n_classes:
        raise ConfigError("train and test datasets disagree on features or classes")
    plan = partition(train, cfg.partition)

    ledger = None
    if cfg.algorithm == "fedhenet":
        report, ledger = run_fedhenet_round(cfg, train, test, plan)
    else:
        report = run_baseline_experiment(cfg, train, test, plan)

    paths = emit_report(report, outdir)
    if ledger is not None:
        log_path = outdir / "messages.log"
        ledger.save_log(log_path)
        paths["messages"] = log_path
    paths["report_obj"] = report
    return paths
