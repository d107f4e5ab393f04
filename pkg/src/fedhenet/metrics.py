"""Communication/time accounting and report emission.

Bytes are counted at the transport boundary: a counting decorator records
the exact envelope length of every publish, keyed by direction and message
type, and mirrors each event into a line-oriented message log so totals can
be recounted independently.  Energy is deliberately not measured; bytes and
wall time are the reproducible proxies.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError
from .federation.envelope import MSG_ABORT, MSG_MODEL, MSG_UPDATE

_TYPE_NAMES = {MSG_UPDATE: "UPDATE", MSG_MODEL: "MODEL", MSG_ABORT: "ABORT"}


class ByteLedger:
    """Thread-safe (direction, msg_type) -> (messages, bytes) counters plus a
    verbatim message log."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {}
        self.log = []  # (direction, topic, msg_type_name, nbytes)

    def record(self, direction: str, topic: str, payload: bytes):
        msg_type = payload[6] if len(payload) > 6 else 0
        name = _TYPE_NAMES.get(msg_type, "OTHER")
        with self._lock:
            n, b = self._counts.get((direction, name), (0, 0))
            self._counts[(direction, name)] = (n + 1, b + len(payload))
            self.log.append((direction, topic, name, len(payload)))

    def bytes_for(self, direction: str = None, msg_type: str = None) -> int:
        with self._lock:
            return sum(
                b
                for (d, t), (_, b) in self._counts.items()
                if (direction is None or d == direction) and (msg_type is None or t == msg_type)
            )

    def message_count(self, direction: str = None, msg_type: str = None) -> int:
        with self._lock:
            return sum(
                n
                for (d, t), (n, _) in self._counts.items()
                if (direction is None or d == direction) and (msg_type is None or t == msg_type)
            )

    def save_log(self, path):
        with open(path, "w") as fh:
            for direction, topic, name, nbytes in self.log:
                fh.write(f"{direction}\t{topic}\t{name}\t{nbytes}\n")

    @staticmethod
    def recount_log(path) -> int:
        total = 0
        with open(path) as fh:
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 4:
                    raise FormatError(f"bad message log line: {line!r}")
                total += int(parts[3])
        return total


class CountingTransport:
    """Transport decorator: every publish adds its full envelope length to the
    ledger under this participant's direction label."""

    def __init__(self, inner, ledger: ByteLedger, direction: str):
        self._inner = inner
        self._ledger = ledger
        self._direction = direction

    def connect(self, *args, **kwargs):
        return self._inner.connect(*args, **kwargs)

    def publish(self, topic: str, payload: bytes):
        self._ledger.record(self._direction, topic, payload)
        return self._inner.publish(topic, payload)

    def subscribe(self, pattern: str):
        return self._inner.subscribe(pattern)

    def close(self):
        return self._inner.close()


@dataclass
class RunReport:
    run_id: str
    algorithm: str
    dataset_id: str
    clients: int
    partition: str
    lam: float
    epsilon: float
    activation: str
    he_enabled: bool
    total_bytes_up: int
    total_bytes_down: int
    accuracy: float
    wall_seconds: dict = field(default_factory=dict)  # per phase
    inflation_ratio: float = 0.0
    he_overhead_ms_per_client: float = 0.0
    notes: dict = field(default_factory=dict)
    curve: list = field(default_factory=list)  # rows: round, accuracy, cum_bytes, cum_seconds
    alpha: str = "-"


def emit_report(report: RunReport, outdir, figures: bool = True) -> dict:
    """Write report.txt (one key=value datum per line), curve.csv, and the
    accuracy-vs-cost figures.  Returns the paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report_path = outdir / "report.txt"
    lines = [
        ("run_id", report.run_id),
        ("algorithm", report.algorithm),
        ("dataset", report.dataset_id),
        ("clients", report.clients),
        ("partition", report.partition),
        ("alpha", report.alpha),
        ("lambda", report.lam),
        ("epsilon", report.epsilon),
        ("activation", report.activation),
        ("he_enabled", report.he_enabled),
        ("total_bytes_up", report.total_bytes_up),
        ("total_bytes_down", report.total_bytes_down),
        ("total_bytes", report.total_bytes_up + report.total_bytes_down),
        ("test_accuracy", f"{report.accuracy:.6f}"),
        ("energy_note", "energy is not measured; bytes and wall time are the proxies"),
    ]
    for phase, secs in sorted(report.wall_seconds.items()):
        lines.append((f"seconds_{phase}", f"{secs:.6f}"))
    if report.he_enabled:
        lines.append(("ciphertext_inflation_ratio", f"{report.inflation_ratio:.4f}"))
        lines.append(("he_overhead_ms_per_client", f"{report.he_overhead_ms_per_client:.3f}"))
    for key, val in sorted(report.notes.items()):
        lines.append((key, val))
    with open(report_path, "w") as fh:
        for key, val in lines:
            fh.write(f"{key}={val}\n")

    curve_path = outdir / "curve.csv"
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "algorithm", "alpha", "accuracy", "cum_bytes", "cum_seconds"])
        for row in report.curve:
            writer.writerow(
                [
                    row["round"],
                    report.algorithm,
                    report.alpha,
                    f"{row['accuracy']:.6f}",
                    row["cum_bytes"],
                    f"{row['cum_seconds']:.6f}",
                ]
            )
    paths = {"report": report_path, "curve": curve_path}
    if figures:
        from .plots import render_curve_figures

        paths.update(render_curve_figures(curve_path, outdir))
    return paths


def parse_report(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"bad report line {lineno}: {line!r}")
            key, val = line.split("=", 1)
            out[key] = val
    return out


def load_curve(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
