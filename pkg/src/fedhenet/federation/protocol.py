"""Single-round coordinator/client protocol.

Clients publish one UPDATE each; the coordinator folds updates as they
arrive (deduplicating by sender id, so at-least-once transports are safe),
solves the closed-form system once K distinct updates are in, and publishes
exactly one MODEL.  On timeout it publishes ABORT instead.
"""

from __future__ import annotations

import logging
import queue
import time
from dataclasses import dataclass, field
from enum import Enum

from ..errors import FormatError, TransportError
from ..rolann import (
    ActivationKind,
    EncryptedModel,
    GlobalModel,
    HyperParams,
    aggregate,
    compute_client_update,
    decrypt_model,
    solve_weights,
)
from .codec import decode_model, decode_update, encode_model, encode_update
from .envelope import MSG_ABORT, MSG_MODEL, MSG_UPDATE, decode_envelope, encode_envelope

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundConfig:
    expected_clients: int
    round_id: int = 0
    timeout: float = 300.0
    he_enabled: bool = False
    lam: float = 0.01
    epsilon: float = 0.05
    activation: ActivationKind = ActivationKind.IDENTITY
    include_bias: bool = True

    def __post_init__(self):
        if self.expected_clients < 1:
            raise ValueError("expected_clients must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")

    def hyper_params(self) -> HyperParams:
        return HyperParams(
            lam=self.lam,
            epsilon=self.epsilon,
            activation=self.activation,
            include_bias=self.include_bias,
        )


def update_topic(round_id: int, client_id) -> str:
    return f"fedhenet/{round_id}/update/{client_id}"


def model_topic(round_id: int) -> str:
    return f"fedhenet/{round_id}/model"


class CoordinatorPhase(Enum):
    WAITING = "waiting_for_updates"
    AGGREGATING = "aggregating"
    PUBLISHED = "published"
    ABORTED = "aborted"


class ClientPhase(Enum):
    IDLE = "idle"
    UPDATE_SENT = "update_sent"
    MODEL_RECEIVED = "model_received"
    FAILED = "failed"


_COORD_ORDER = [
    CoordinatorPhase.WAITING,
    CoordinatorPhase.AGGREGATING,
    CoordinatorPhase.PUBLISHED,
    CoordinatorPhase.ABORTED,
]
_CLIENT_ORDER = [
    ClientPhase.IDLE,
    ClientPhase.UPDATE_SENT,
    ClientPhase.MODEL_RECEIVED,
    ClientPhase.FAILED,
]


class _StateMachine:
    """Forward-only phase tracker."""

    def __init__(self, order):
        self._order = order
        self.phase = order[0]

    def advance(self, phase):
        if self._order.index(phase) < self._order.index(self.phase):
            raise RuntimeError(f"illegal transition {self.phase} -> {phase}")
        self.phase = phase


@dataclass
class RoundSummary:
    ok: bool
    reason: str = ""
    client_count: int = 0
    received_ids: tuple = ()
    duplicates: int = 0
    malformed: int = 0
    timings: dict = field(default_factory=dict)
    model: object = None


def coordinator_run(cfg: RoundConfig, ctx, transport, ready=None) -> RoundSummary:
    """Collect K distinct updates, solve, publish one MODEL (or ABORT).

    `ready`, when given, is a threading.Event set once the update
    subscription is live (so in-process harnesses can order startup)."""
    if cfg.he_enabled and ctx is not None and ctx.role != "coordinator" and ctx.can_decrypt:
        raise TransportError("coordinator must run with a decrypt-incapable context when HE is on")
    state = _StateMachine(_COORD_ORDER)
    inbox = transport.subscribe(update_topic(cfg.round_id, "+"))
    if ready is not None:
        ready.set()
    deadline = time.monotonic() + cfg.timeout
    received = {}
    agg = None
    duplicates = malformed = 0
    t_start = time.monotonic()
    t_aggregate = 0.0

    while len(received) < cfg.expected_clients:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            state.advance(CoordinatorPhase.ABORTED)
            transport.publish(
                model_topic(cfg.round_id),
                encode_envelope(MSG_ABORT, cfg.round_id, 0, b"timeout waiting for updates"),
            )
            return RoundSummary(
                ok=False,
                reason=f"timeout: {len(received)} of {cfg.expected_clients} updates",
                client_count=len(received),
                received_ids=tuple(sorted(received)),
                duplicates=duplicates,
                malformed=malformed,
                timings={"wait_s": time.monotonic() - t_start},
            )
        try:
            _topic, raw = inbox.get(timeout=remaining)
        except queue.Empty:
            continue
        try:
            env = decode_envelope(raw)
            if env.msg_type != MSG_UPDATE or env.round_id != cfg.round_id:
                raise FormatError("unexpected message type or round id")
            if env.sender_id in received:
                duplicates += 1
                continue
            upd = decode_update(env.payload, he_ctx=ctx if cfg.he_enabled else None)
        except FormatError as exc:
            malformed += 1
            log.warning("ignoring malformed message: %s", exc)
            continue
        received[env.sender_id] = True
        t0 = time.monotonic()
        agg = aggregate([upd]) if agg is None else aggregate([agg, upd])
        t_aggregate += time.monotonic() - t0

    state.advance(CoordinatorPhase.AGGREGATING)
    t0 = time.monotonic()
    model = solve_weights(
        agg,
        cfg.lam,
        evaluator=ctx if cfg.he_enabled else None,
        activation=cfg.activation,
        include_bias=cfg.include_bias,
    )
    t_solve = time.monotonic() - t0
    payload = encode_model(model, he_ctx=ctx if cfg.he_enabled else None)
    transport.publish(
        model_topic(cfg.round_id), encode_envelope(MSG_MODEL, cfg.round_id, 0, payload)
    )
    state.advance(CoordinatorPhase.PUBLISHED)
    return RoundSummary(
        ok=True,
        client_count=len(received),
        received_ids=tuple(sorted(received)),
        duplicates=duplicates,
        malformed=malformed,
        timings={
            "wait_s": time.monotonic() - t_start,
            "aggregate_s": t_aggregate,
            "solve_s": t_solve,
        },
        model=model if isinstance(model, GlobalModel) else None,
    )


@dataclass
class ClientResult:
    model: GlobalModel
    phase: ClientPhase
    timings: dict


def client_run(ds, cfg: RoundConfig, ctx, transport, client_id: int) -> ClientResult:
    """Compute and publish one update, then wait for the global model."""
    state = _StateMachine(_CLIENT_ORDER)
    inbox = transport.subscribe(model_topic(cfg.round_id))

    t0 = time.monotonic()
    upd = compute_client_update(
        ds,
        cfg.hyper_params(),
        encryptor=ctx if cfg.he_enabled else None,
        client_id=client_id,
    )
    payload = encode_update(upd, he_ctx=ctx if cfg.he_enabled else None)
    t_compute = time.monotonic() - t0
    transport.publish(
        update_topic(cfg.round_id, client_id),
        encode_envelope(MSG_UPDATE, cfg.round_id, client_id, payload),
    )
    state.advance(ClientPhase.UPDATE_SENT)

    deadline = time.monotonic() + cfg.timeout
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            state.advance(ClientPhase.FAILED)
            raise TransportError(f"client {client_id}: timeout waiting for the global model")
        try:
            _topic, raw = inbox.get(timeout=remaining)
        except queue.Empty:
            continue
        try:
            env = decode_envelope(raw)
        except FormatError as exc:
            log.warning("client %s ignoring malformed message: %s", client_id, exc)
            continue
        if env.round_id != cfg.round_id:
            continue
        if env.msg_type == MSG_ABORT:
            state.advance(ClientPhase.FAILED)
            raise TransportError(
                f"client {client_id}: round aborted by coordinator: "
                f"{env.payload.decode('utf-8', 'replace')}"
            )
        if env.msg_type != MSG_MODEL:
            continue
        t0 = time.monotonic()
        model = decode_model(env.payload, he_ctx=ctx if cfg.he_enabled else None)
        if isinstance(model, EncryptedModel):
            model = decrypt_model(model, ctx)
        t_decrypt = time.monotonic() - t0
        state.advance(ClientPhase.MODEL_RECEIVED)
        return ClientResult(
            model=model,
            phase=state.phase,
            timings={"compute_s": t_compute, "decrypt_s": t_decrypt},
        )
