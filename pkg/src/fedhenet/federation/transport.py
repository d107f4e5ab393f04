"""Pluggable pub/sub transports: in-process loopback and MQTT.

The transport contract: `connect()`, `publish(topic, payload)`,
`subscribe(pattern) -> Queue` (messages arrive as (topic, bytes) tuples,
in order per topic), `close()`.  Patterns use MQTT syntax (`+` one level,
`#` remainder).
"""

from __future__ import annotations

import logging
import queue
import threading
import time
import urllib.parse

from ..errors import TransportError

log = logging.getLogger(__name__)

RECONNECT_MIN_S = 0.5
RECONNECT_MAX_S = 30.0


def topic_matches(pattern: str, topic: str) -> bool:
    p_parts = pattern.split("/")
    t_parts = topic.split("/")
    for i, p in enumerate(p_parts):
        if p == "#":
            return True
        if i >= len(t_parts):
            return False
        if p != "+" and p != t_parts[i]:
            return False
    return len(p_parts) == len(t_parts)


class LoopbackBus:
    """Shared in-process broker; hand each participant its own transport view."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs = []  # (pattern, queue)

    def transport(self) -> "LoopbackTransport":
        return LoopbackTransport(self)

    def publish(self, topic: str, payload: bytes):
        data = bytes(payload)
        with self._lock:
            targets = [q for pat, q in self._subs if topic_matches(pat, topic)]
        for q in targets:
            q.put((topic, data))

    def subscribe(self, pattern: str) -> queue.Queue:
        q = queue.Queue()
        with self._lock:
            self._subs.append((pattern, q))
        return q

    def unsubscribe(self, q: queue.Queue):
        with self._lock:
            self._subs = [(p, s) for p, s in self._subs if s is not q]


class LoopbackTransport:
    def __init__(self, bus: LoopbackBus):
        self._bus = bus
        self._queues = []

    def connect(self):
        pass

    def publish(self, topic: str, payload: bytes):
        self._bus.publish(topic, payload)

    def subscribe(self, pattern: str) -> queue.Queue:
        q = self._bus.subscribe(pattern)
        self._queues.append(q)
        return q

    def close(self):
        for q in self._queues:
            self._bus.unsubscribe(q)
        self._queues = []


class MqttTransport:
    """MQTT binding: QoS 1 with persistent sessions and capped exponential
    reconnect backoff.  Receivers must deduplicate (at-least-once delivery)."""

    def __init__(self, broker_url: str, client_id: str):
        self.broker_url = broker_url
        self.client_id = client_id
        self._client = None
        self._queues = []  # (pattern, queue)
        self._lock = threading.Lock()
        self._connected = threading.Event()

    def connect(self, timeout: float = 10.0):
        try:
            import paho.mqtt.client as mqtt
        except ImportError as exc:  # pragma: no cover
            raise TransportError("paho-mqtt is required for MQTT transports") from exc
        parsed = urllib.parse.urlparse(self.broker_url)
        if parsed.scheme not in ("mqtt", "tcp", ""):
            raise TransportError(f"unsupported broker scheme {parsed.scheme!r}")
        host = parsed.hostname or self.broker_url
        port = parsed.port or 1883
        try:
            client = mqtt.Client(
                callback_api_version=mqtt.CallbackAPIVersion.VERSION2,
                client_id=self.client_id,
                clean_session=False,
            )
        except (AttributeError, TypeError):  # paho-mqtt 1.x
            client = mqtt.Client(client_id=self.client_id, clean_session=False)
        client.reconnect_delay_set(min_delay=RECONNECT_MIN_S, max_delay=RECONNECT_MAX_S)
        client.on_connect = self._on_connect
        client.on_message = self._on_message
        client.on_disconnect = self._on_disconnect
        self._client = client
        try:
            client.connect(host, port)
        except OSError as exc:
            raise TransportError(f"cannot reach MQTT broker at {host}:{port}: {exc}") from exc
        client.loop_start()
        if not self._connected.wait(timeout):
            client.loop_stop()
            raise TransportError(f"MQTT broker at {host}:{port} did not accept the connection")

    def _on_connect(self, client, userdata, *args, **kwargs):
        self._connected.set()
        with self._lock:
            patterns = [p for p, _ in self._queues]
        for p in patterns:
            client.subscribe(p, qos=1)

    def _on_disconnect(self, client, userdata, *args, **kwargs):
        log.warning("MQTT connection lost; automatic reconnect engaged")
        self._connected.clear()

    def _on_message(self, client, userdata, msg):
        with self._lock:
            targets = [q for pat, q in self._queues if topic_matches(pat, msg.topic)]
        for q in targets:
            q.put((msg.topic, bytes(msg.payload)))

    def publish(self, topic: str, payload: bytes):
        if self._client is None:
            raise TransportError("publish before connect")
        info = self._client.publish(topic, payload, qos=1)
        info.wait_for_publish()

    def subscribe(self, pattern: str) -> queue.Queue:
        q = queue.Queue()
        with self._lock:
            self._queues.append((pattern, q))
        if self._client is not None and self._connected.is_set():
            self._client.subscribe(pattern, qos=1)
        return q

    def close(self):
        if self._client is not None:
            self._client.loop_stop()
            self._client.disconnect()
            self._client = None


def make_transport(endpoint: str, client_id: str = "fedhenet", bus: LoopbackBus = None):
    """`loopback` (with a shared bus) or an mqtt:// broker URL."""
    if endpoint == "loopback":
        if bus is None:
            raise TransportError("loopback transport requires a shared bus")
        return bus.transport()
    return MqttTransport(endpoint, client_id)
