"""Binary payloads for UPDATE and MODEL messages.

Matrices are little-endian f64 row-major with u32 dimensions.  Per-class
update blocks carry (d u32, r u32, U, S, M); with a shared basis (identity
activation) the (U, S) block appears once followed by the per-class M
vectors.  Ciphertext blobs are embedded with a u32 length prefix.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError, InputError
from ..rolann import ActivationKind, ClassUpdate, ClientUpdate, EncryptedModel, GlobalModel

_FLAG_ENCRYPTED = 1
_FLAG_SHARED = 2
_FLAG_BIAS = 2
_FLAG_LOGISTIC = 4

_UPDATE_HEADER = struct.Struct("<IQIIB")
_MODEL_HEADER = struct.Struct("<IIB")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, fmt: str):
        s = struct.Struct(fmt)
        if self.off + s.size > len(self.data):
            raise FormatError("payload truncated")
        vals = s.unpack_from(self.data, self.off)
        self.off += s.size
        return vals if len(vals) > 1 else vals[0]

    def matrix(self, rows: int, cols: int) -> np.ndarray:
        n = rows * cols * 8
        if self.off + n > len(self.data):
            raise FormatError("payload truncated inside a matrix block")
        out = np.frombuffer(self.data, dtype="<f8", count=rows * cols, offset=self.off)
        self.off += n
        return out.reshape(rows, cols).astype(np.float64)

    def blob(self) -> bytes:
        n = self.take("<I")
        if self.off + n > len(self.data):
            raise FormatError("payload truncated inside a ciphertext blob")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out

    def done(self):
        if self.off != len(self.data):
            raise FormatError(f"{len(self.data) - self.off} trailing bytes in payload")


def _basis_bytes(U: np.ndarray, S: np.ndarray) -> bytes:
    d, r = U.shape
    return (
        struct.pack("<II", d, r)
        + U.astype("<f8").tobytes()
        + S.astype("<f8").tobytes()
    )


def _read_basis(rd: _Reader):
    d, r = rd.take("<II")
    U = rd.matrix(d, r)
    S = rd.matrix(1, r)[0]
    return U, S


def encode_update(upd: ClientUpdate, he_ctx=None) -> bytes:
    C = len(upd.per_class)
    d = upd.per_class[0].U.shape[0]
    encrypted = not isinstance(upd.per_class[0].M, np.ndarray)
    if encrypted and he_ctx is None:
        raise InputError("encrypted update requires an encryption context to serialize")
    flags = (_FLAG_ENCRYPTED if encrypted else 0) | (_FLAG_SHARED if upd.shared_basis else 0)
    parts = [_UPDATE_HEADER.pack(upd.client_id, upd.sample_count, C, d, flags)]

    def m_bytes(M):
        if encrypted:
            blob = he_ctx.serialize_ct(M)
            return struct.pack("<I", len(blob)) + blob
        return np.asarray(M).astype("<f8").tobytes()

    if upd.shared_basis:
        cu0 = upd.per_class[0]
        parts.append(_basis_bytes(cu0.U, cu0.S))
        for cu in upd.per_class:
            parts.append(m_bytes(cu.M))
    else:
        for cu in upd.per_class:
            parts.append(_basis_bytes(cu.U, cu.S))
            parts.append(m_bytes(cu.M))
    return b"".join(parts)


def decode_update(data: bytes, he_ctx=None) -> ClientUpdate:
    rd = _Reader(data)
    client_id, sample_count, C, d, flags = rd.take("<IQIIB")
    encrypted = bool(flags & _FLAG_ENCRYPTED)
    shared = bool(flags & _FLAG_SHARED)
    if encrypted and he_ctx is None:
        raise InputError("encrypted update requires an encryption context to decode")

    def read_m():
        if encrypted:
            return he_ctx.deserialize_ct(rd.blob())
        return rd.matrix(1, d)[0]

    per_class = []
    if shared:
        U, S = _read_basis(rd)
        for _ in range(C):
            per_class.append(ClassUpdate(U=U, S=S, M=read_m()))
    else:
        for _ in range(C):
            U, S = _read_basis(rd)
            per_class.append(ClassUpdate(U=U, S=S, M=read_m()))
    rd.done()
    return ClientUpdate(
        client_id=client_id, sample_count=sample_count, per_class=per_class, shared_basis=shared
    )


def encode_model(model, he_ctx=None) -> bytes:
    if isinstance(model, GlobalModel):
        d, C = model.W.shape
        flags = (_FLAG_BIAS if model.include_bias else 0) | (
            _FLAG_LOGISTIC if model.activation is ActivationKind.LOGISTIC else 0
        )
        return _MODEL_HEADER.pack(d, C, flags) + model.W.astype("<f8").tobytes()
    if isinstance(model, EncryptedModel):
        if he_ctx is None:
            raise InputError("encrypted model requires an encryption context to serialize")
        flags = (
            _FLAG_ENCRYPTED
            | (_FLAG_BIAS if model.include_bias else 0)
            | (_FLAG_LOGISTIC if model.activation is ActivationKind.LOGISTIC else 0)
        )
        parts = [_MODEL_HEADER.pack(model.d, len(model.columns), flags)]
        for ct in model.columns:
            blob = he_ctx.serialize_ct(ct)
            parts.append(struct.pack("<I", len(blob)) + blob)
        return b"".join(parts)
    raise InputError(f"cannot encode model of type {type(model)!r}")


def decode_model(data: bytes, he_ctx=None):
    rd = _Reader(data)
    d, C, flags = rd.take("<IIB")
    activation = ActivationKind.LOGISTIC if flags & _FLAG_LOGISTIC else ActivationKind.IDENTITY
    include_bias = bool(flags & _FLAG_BIAS)
    if flags & _FLAG_ENCRYPTED:
        if he_ctx is None:
            raise InputError("encrypted model requires an encryption context to decode")
        columns = [he_ctx.deserialize_ct(rd.blob()) for _ in range(C)]
        rd.done()
        return EncryptedModel(columns=columns, d=d, activation=activation, include_bias=include_bias)
    W = rd.matrix(d, C)
    rd.done()
    return GlobalModel(W=W, activation=activation, include_bias=include_bias)


def update_payload_bytes(d: int, ranks, n_classes: int, shared: bool, m_bytes: int) -> int:
    """Format arithmetic for an UPDATE payload; m_bytes is the size of one
    serialized M vector (d * 8 plaintext, blob + 4 when encrypted)."""
    header = _UPDATE_HEADER.size
    if shared:
        r = ranks if isinstance(ranks, int) else ranks[0]
        return header + (8 + d * r * 8 + r * 8) + n_classes * m_bytes
    total = header
    for r in ranks if not isinstance(ranks, int) else [ranks] * n_classes:
        total += 8 + d * r * 8 + r * 8 + m_bytes
    return total


def model_payload_bytes(d: int, n_classes: int, encrypted_col_bytes: int = 0) -> int:
    if encrypted_col_bytes:
        return _MODEL_HEADER.size + n_classes * (4 + encrypted_col_bytes)
    return _MODEL_HEADER.size + d * n_classes * 8
