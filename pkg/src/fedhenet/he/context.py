"""Backend-dispatching encryption context.

One object carries parameters, key material, and a role.  Coordinator-role
contexts are constructed without a secret key (enforced), so the aggregation
side is structurally unable to decrypt.
"""

from __future__ import annotations

import numpy as np

from ..errors import CryptoError, InputError
from . import ckks, mock, serial
from .params import HeParams

BACKEND_CKKS = "ckks"
BACKEND_MOCK = "mock"

ROLE_CLIENT = "client"
ROLE_COORDINATOR = "coordinator"


def default_rotation_steps(dimension: int):
    """Powers of two (both directions) up to the next power of two >= dimension."""
    steps = []
    k = 1
    while k < dimension:
        steps.extend([k, -k])
        k *= 2
    return steps or [1, -1]


class EncryptionContext:
    def __init__(
        self,
        params: HeParams,
        backend: str = BACKEND_CKKS,
        role: str = ROLE_CLIENT,
        public_key=None,
        secret_key=None,
        rotation_keys=None,
        seed: int = 0,
    ):
        if backend not in (BACKEND_CKKS, BACKEND_MOCK):
            raise InputError(f"unknown backend {backend!r}")
        if role not in (ROLE_CLIENT, ROLE_COORDINATOR):
            raise InputError(f"unknown role {role!r}")
        if role == ROLE_COORDINATOR and secret_key is not None:
            raise CryptoError("coordinator contexts must not hold a secret key")
        self.params = params
        self.backend = backend
        self.role = role
        self.public_key = public_key
        self.secret_key = secret_key
        self.rotation_keys = rotation_keys
        self._rng = np.random.default_rng(seed)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def mock(cls, params: HeParams = None, role: str = ROLE_CLIENT) -> "EncryptionContext":
        return cls(params or HeParams.desk(), backend=BACKEND_MOCK, role=role)

    @classmethod
    def from_key_file(cls, path, role: str = ROLE_CLIENT, seed: int = 0) -> "EncryptionContext":
        params, sk, pk, rot = serial.load_keys(path)
        if role == ROLE_COORDINATOR:
            sk = None  # coordinator never receives the secret, even if present on disk
        return cls(
            params,
            backend=BACKEND_CKKS,
            role=role,
            public_key=pk,
            secret_key=sk,
            rotation_keys=rot,
            seed=seed,
        )

    def coordinator_view(self) -> "EncryptionContext":
        """Same keys minus the secret: what the aggregation side is given."""
        return EncryptionContext(
            self.params,
            backend=self.backend,
            role=ROLE_COORDINATOR,
            public_key=self.public_key,
            secret_key=None,
            rotation_keys=self.rotation_keys,
        )

    # -- capabilities ---------------------------------------------------------

    @property
    def can_decrypt(self) -> bool:
        return self.backend == BACKEND_MOCK and self.role != ROLE_COORDINATOR or (
            self.secret_key is not None
        )

    @property
    def slot_count(self) -> int:
        return self.params.slot_count

    # -- operations -----------------------------------------------------------

    def encrypt(self, v):
        if self.backend == BACKEND_MOCK:
            return mock.mock_encrypt(v, self.slot_count)
        if self.public_key is None:
            raise CryptoError("encrypt requires a public key")
        return ckks.encrypt(v, self.public_key, self._rng)

    def decrypt(self, ct):
        if self.role == ROLE_COORDINATOR:
            raise CryptoError("coordinator contexts cannot decrypt")
        if self.backend == BACKEND_MOCK:
            return mock.mock_decrypt(ct)
        return ckks.decrypt(ct, self.secret_key)

    def add(self, a, b):
        if self.backend == BACKEND_MOCK:
            return a + b
        return ckks.add_ct(a, b)

    def add_many(self, cts):
        cts = list(cts)
        if self.backend == BACKEND_MOCK:
            if not cts:
                raise InputError("add_many requires at least one ciphertext")
            out = cts[0]
            for ct in cts[1:]:
                out = out + ct
            return out
        return ckks.add_many(cts)

    def rotate(self, ct, step: int):
        if self.backend == BACKEND_MOCK:
            return mock.mock_rotate(ct, step)
        return ckks.rotate(ct, step, self.rotation_keys)

    def mul_plain(self, ct, p):
        if self.backend == BACKEND_MOCK:
            return mock.mock_mul_plain(ct, p)
        return ckks.mul_plain(ct, p)

    def matvec(self, A, ct):
        if self.backend == BACKEND_MOCK:
            return mock.mock_matvec(A, ct)
        return ckks.matvec_plain(A, ct, self.rotation_keys)

    # -- serialization --------------------------------------------------------

    def serialize_ct(self, ct) -> bytes:
        if self.backend == BACKEND_MOCK:
            return mock.serialize_mock(ct)
        return serial.serialize_ct(ct)

    def deserialize_ct(self, data: bytes):
        if self.backend == BACKEND_MOCK:
            return mock.deserialize_mock(data, self.slot_count)
        return serial.deserialize_ct(data, self.params)

    def ciphertext_bytes(self, logical_len: int) -> int:
        """Serialized ciphertext size for a vector of the given length."""
        if self.backend == BACKEND_MOCK:
            return logical_len * 8
        return serial.ciphertext_bytes(self.params)
