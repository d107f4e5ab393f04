"""Command line entry points.

Exit codes: 0 success, 2 configuration problems, 3 transport failures,
4 numeric failures, 1 anything else.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .config import load_config
from .data import PartitionScheme, PartitionSpec, load_femb, partition as make_partition, save_plan
from .errors import ConfigError, FedHENetError, NumericError, TransportError
from .federation.protocol import RoundConfig, client_run, coordinator_run
from .federation.transport import make_transport
from .he import serial as he_serial
from .he.ckks import keygen as he_keygen
from .he.context import ROLE_CLIENT, ROLE_COORDINATOR, EncryptionContext, default_rotation_steps
from .he.params import HeParams
from .metrics import ByteLedger, parse_report
from .plots import render_curve_figures

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_NUMERIC = 4


def _fail(exc: Exception) -> int:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, TransportError):
        return EXIT_TRANSPORT
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    return 1


def _load(config_path: str):
    cfg = load_config(config_path)
    broker = os.environ.get("FEDHENET_BROKER_URL")
    if broker:
        cfg.transport = broker
    return cfg


@click.group()
def main():
    """Single-round federated classifier over frozen embeddings."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--outdir", "-o", default=None, help="Output directory (overrides config).")
def run(config_path, outdir):
    """Run the full experiment in one process over the loopback bus."""
    from .runner import run_experiment

    try:
        cfg = _load(config_path)
        paths = run_experiment(cfg, outdir)
        report = paths.pop("report_obj")
        click.echo(f"algorithm={report.algorithm} accuracy={report.accuracy:.4f}")
        for name, path in paths.items():
            click.echo(f"{name}: {path}")
    except FedHENetError as exc:
        sys.exit(_fail(exc))


@main.command()
@click.argument("config_path", type=click.Path())
def coordinator(config_path):
    """Run one coordinator round against the configured broker."""
    try:
        cfg = _load(config_path)
        if cfg.transport == "loopback":
            raise ConfigError(
                "the standalone coordinator needs an mqtt:// transport "
                "(set 'transport' or FEDHENET_BROKER_URL); use 'run' for loopback"
            )
        ctx = None
        if cfg.he_enabled:
            if cfg.he_backend == "mock":
                ctx = EncryptionContext.mock(role=ROLE_COORDINATOR)
            else:
                ctx = EncryptionContext.from_key_file(cfg.key_file, role=ROLE_COORDINATOR)
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
        transport = make_transport(cfg.transport, client_id=f"fedhenet-coord-{cfg.round_id}")
        transport.connect()
        try:
            summary = coordinator_run(round_cfg, ctx, transport)
        finally:
            transport.close()
        if not summary.ok:
            raise TransportError(summary.reason)
        click.echo(
            f"round {cfg.round_id} complete: {summary.client_count} clients, "
            f"{summary.duplicates} duplicates, {summary.malformed} malformed"
        )
    except FedHENetError as exc:
        sys.exit(_fail(exc))


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--id", "client_id", type=int, required=True, help="Client index in [0, clients).")
def client(config_path, client_id):
    """Run one client against the configured broker."""
    try:
        cfg = _load(config_path)
        if cfg.transport == "loopback":
            raise ConfigError(
                "the standalone client needs an mqtt:// transport "
                "(set 'transport' or FEDHENET_BROKER_URL); use 'run' for loopback"
            )
        if not 0 <= client_id < cfg.clients:
            raise ConfigError(f"--id must lie in [0, {cfg.clients})")
        train = load_femb(cfg.train_path)
        plan = make_partition(train, cfg.partition)
        ds = train.subset(plan.assignments[client_id])
        ctx = None
        if cfg.he_enabled:
            if cfg.he_backend == "mock":
                ctx = EncryptionContext.mock(role=ROLE_CLIENT)
            else:
                ctx = EncryptionContext.from_key_file(cfg.key_file, role=ROLE_CLIENT)
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
        transport = make_transport(cfg.transport, client_id=f"fedhenet-client-{client_id}")
        transport.connect()
        try:
            result = client_run(ds, round_cfg, ctx, transport, client_id)
        finally:
            transport.close()
        click.echo(
            f"client {client_id}: received global model "
            f"({result.model.W.shape[0]}x{result.model.W.shape[1]})"
        )
    except FedHENetError as exc:
        sys.exit(_fail(exc))


@main.command()
@click.argument("femb_path", type=click.Path())
@click.option("--scheme", type=click.Choice([s.value for s in PartitionScheme]), default="iid")
@click.option("--clients", type=int, required=True)
@click.option("--alpha", type=float, default=1.0, help="Dirichlet concentration.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "-o", type=click.Path(), required=True, help="Plan file to write.")
def partition(femb_path, scheme, clients, alpha, seed, out):
    """Partition a dataset into per-client index lists."""
    try:
        ds = load_femb(femb_path)
        spec = PartitionSpec(
            scheme=PartitionScheme(scheme), client_count=clients, seed=seed, alpha=alpha
        )
        plan = make_partition(ds, spec)
        save_plan(plan, out)
        sizes = [len(a) for a in plan.assignments]
        click.echo(f"wrote {out}: {clients} clients, sizes {sizes}")
    except FedHENetError as exc:
        sys.exit(_fail(exc))
    except ValueError as exc:
        sys.exit(_fail(ConfigError(str(exc))))


@main.command()
@click.option("--out", "-o", type=click.Path(), required=True, help="Key file to write.")
@click.option("--ring-degree", type=int, default=0, help="Override the ring degree.")
@click.option(
    "--profile",
    type=click.Choice(["default", "desk"]),
    default="default",
    help="'default' is the production parameter set; 'desk' is the small fast one.",
)
@click.option("--dimension", type=int, default=1024, help="Largest vector the keys must rotate.")
@click.option("--seed", type=int, default=0)
def keygen(out, ring_degree, profile, dimension, seed):
    """Generate secret, public, and rotation keys into one key file."""
    try:
        if profile == "desk":
            params = HeParams.desk(ring_degree or 512)
        else:
            params = HeParams(ring_degree=ring_degree or 8192)
        if params.slot_count < dimension:
            raise ConfigError(
                f"ring degree {params.ring_degree} gives {params.slot_count} slots, "
                f"fewer than --dimension {dimension}"
            )
        steps = default_rotation_steps(dimension)
        sk, pk, rot = he_keygen(params, steps, seed)
        he_serial.save_keys(out, params, sk=sk, pk=pk, rot=rot)
        size = Path(out).stat().st_size
        click.echo(
            f"wrote {out}: N={params.ring_degree}, {len(params.moduli)} primes, "
            f"{len(steps)} rotation steps, {size} bytes"
        )
    except FedHENetError as exc:
        sys.exit(_fail(exc))


@main.command()
@click.argument("run_dir", type=click.Path())
def report(run_dir):
    """Re-render figures and print the report for a finished run directory."""
    try:
        run_dir = Path(run_dir)
        report_path = run_dir / "report.txt"
        curve_path = run_dir / "curve.csv"
        if not report_path.exists() or not curve_path.exists():
            raise ConfigError(f"{run_dir} does not contain report.txt and curve.csv")
        figures = render_curve_figures(curve_path, run_dir)
        for key, val in parse_report(report_path).items():
            click.echo(f"{key}={val}")
        log_path = run_dir / "messages.log"
        if log_path.exists():
            click.echo(f"messages_log_bytes={ByteLedger.recount_log(log_path)}")
        for name, path in figures.items():
            click.echo(f"{name}: {path}")
    except FedHENetError as exc:
        sys.exit(_fail(exc))


if __name__ == "__main__":
    main()
