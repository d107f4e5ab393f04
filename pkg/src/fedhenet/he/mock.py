"""Pass-through backend sharing the real scheme's interface.

"Encryption" is the identity on the encoded slot vector; every operation is
the exact plaintext computation.  Serialized size equals the plaintext
payload, which pins the ciphertext-inflation ratio at 1.  Used for protocol
tests and as the differential oracle for the real backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass
class MockCiphertext:
    values: np.ndarray  # full slot vector
    logical_len: int  # how many leading slots carry payload (serialized extent)
    scale: float = 1.0
    level: int = 0

    def __add__(self, other):
        if self.values.shape != other.values.shape:
            raise InputError("mock ciphertext slot mismatch")
        return MockCiphertext(
            self.values + other.values,
            max(self.logical_len, other.logical_len),
            self.scale,
            self.level,
        )


def mock_encrypt(v, slots: int) -> MockCiphertext:
    v = np.asarray(v, dtype=np.float64)
    if v.size > slots:
        raise InputError(f"vector of length {v.size} exceeds {slots} slots")
    full = np.zeros(slots)
    full[: v.size] = v
    return MockCiphertext(full, v.size)


def mock_decrypt(ct: MockCiphertext) -> np.ndarray:
    return ct.values.copy()


def mock_rotate(ct: MockCiphertext, step: int) -> MockCiphertext:
    return MockCiphertext(np.roll(ct.values, -step), ct.values.size, ct.scale, ct.level)


def mock_mul_plain(ct: MockCiphertext, p) -> MockCiphertext:
    p = np.asarray(p, dtype=np.float64)
    full = np.zeros_like(ct.values)
    full[: p.size] = p
    return MockCiphertext(ct.values * full, ct.values.size, ct.scale, ct.level)


def mock_matvec(A: np.ndarray, ct: MockCiphertext) -> MockCiphertext:
    A = np.asarray(A, dtype=np.float64)
    d = A.shape[0]
    out = np.zeros_like(ct.values)
    out[:d] = A @ ct.values[:d]
    return MockCiphertext(out, d, ct.scale, ct.level)


def serialize_mock(ct: MockCiphertext) -> bytes:
    return ct.values[: ct.logical_len].astype("<f8").tobytes()


def deserialize_mock(data: bytes, slots: int) -> MockCiphertext:
    if len(data) % 8:
        raise InputError("mock ciphertext blob length must be a multiple of 8")
    v = np.frombuffer(data, dtype="<f8")
    return mock_encrypt(v, slots)
