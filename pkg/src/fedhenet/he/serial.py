"""Wire/file formats for ciphertexts and key material.

Ciphertext: magic "FHEC" | version u16 | level u8 | scale f64 | N u32 |
prime count u8 | c0 then c1, per limb N little-endian u64 coefficients.

Key file: magic "FHEK" | version u16 | params block | three sections
(secret, public, rotation), each a presence flag u8 plus u64 length and
payload.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError
from .ckks import Ciphertext, PublicKey, RotationKeys, SecretKey
from .params import HeParams, ntts, ntts_ext

CT_MAGIC = b"FHEC"
KEY_MAGIC = b"FHEK"
VERSION = 1

_CT_HEADER = struct.Struct("<4sHBdIB")


def ciphertext_bytes(params: HeParams) -> int:
    """Serialized size of any ciphertext at these parameters."""
    return _CT_HEADER.size + 2 * len(params.moduli) * params.ring_degree * 8


def _limb_to_u64(limb) -> bytes:
    if limb.dtype == np.uint64:
        return limb.astype("<u8").tobytes()
    return np.asarray([int(x) for x in limb], dtype="<u8").tobytes()


def _limb_from_u64(data: bytes, offset: int, n: int, ctx):
    raw = np.frombuffer(data, dtype="<u8", count=n, offset=offset)
    if ctx.fast:
        limb = raw.astype(np.uint64)
    else:
        limb = ctx._arr([int(x) for x in raw])
    return limb, offset + n * 8


def serialize_ct(ct: Ciphertext) -> bytes:
    params = ct.params
    parts = [
        _CT_HEADER.pack(
            CT_MAGIC, VERSION, ct.level, ct.scale, params.ring_degree, len(params.moduli)
        )
    ]
    for limbs in (ct.c0, ct.c1):
        for limb in limbs:
            parts.append(_limb_to_u64(limb))
    return b"".join(parts)


def deserialize_ct(data: bytes, params: HeParams) -> Ciphertext:
    if len(data) < _CT_HEADER.size:
        raise FormatError("ciphertext blob truncated")
    magic, version, level, scale, n, nprimes = _CT_HEADER.unpack_from(data)
    if magic != CT_MAGIC:
        raise FormatError(f"bad ciphertext magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported ciphertext version {version}")
    if n != params.ring_degree or nprimes != len(params.moduli):
        raise FormatError(
            f"ciphertext parameters (N={n}, primes={nprimes}) do not match context "
            f"(N={params.ring_degree}, primes={len(params.moduli)})"
        )
    if len(data) != ciphertext_bytes(params):
        raise FormatError("ciphertext blob length mismatch")
    ctxs = ntts(params)
    off = _CT_HEADER.size
    c0, c1 = [], []
    for target in (c0, c1):
        for ctx in ctxs:
            limb, off = _limb_from_u64(data, off, n, ctx)
            target.append(limb)
    return Ciphertext(params, c0, c1, scale, level)


def _pack_section(payload) -> bytes:
    if payload is None:
        return struct.pack("<BQ", 0, 0)
    return struct.pack("<BQ", 1, len(payload)) + payload


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, fmt: str):
        s = struct.Struct(fmt)
        if self.off + s.size > len(self.data):
            raise FormatError("key file truncated")
        vals = s.unpack_from(self.data, self.off)
        self.off += s.size
        return vals if len(vals) > 1 else vals[0]

    def take_bytes(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise FormatError("key file truncated")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out


def save_keys(path, params: HeParams, sk=None, pk=None, rot=None) -> None:
    n = params.ring_degree
    parts = [KEY_MAGIC, struct.pack("<H", VERSION)]
    parts.append(struct.pack("<IddB", n, params.scale, params.noise_std, len(params.moduli)))
    for p in params.moduli:
        parts.append(struct.pack("<Q", p))
    parts.append(struct.pack("<Q", params.ks_prime))

    parts.append(_pack_section(sk.s.astype("<i1").tobytes() if sk else None))
    if pk is not None:
        blob = b"".join(_limb_to_u64(x) for x in pk.b + pk.a)
        parts.append(_pack_section(blob))
    else:
        parts.append(_pack_section(None))
    if rot is not None:
        chunks = [struct.pack("<H", len(rot.steps))]
        for step in rot.steps:
            chunks.append(struct.pack("<i", step))
            B, A = rot.keys[step]
            for digits in (B, A):
                for digit in digits:
                    for limb in digit:
                        chunks.append(_limb_to_u64(limb))
        parts.append(_pack_section(b"".join(chunks)))
    else:
        parts.append(_pack_section(None))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_keys(path):
    with open(path, "rb") as fh:
        rd = _Reader(fh.read())
    if rd.take_bytes(4) != KEY_MAGIC:
        raise FormatError("bad key file magic")
    if rd.take("<H") != VERSION:
        raise FormatError("unsupported key file version")
    n, scale, noise, nprimes = rd.take("<IddB")
    moduli = tuple(rd.take("<Q") for _ in range(nprimes))
    ks_prime = rd.take("<Q")
    params = HeParams(
        ring_degree=n, moduli=moduli, ks_prime=ks_prime, scale=scale, noise_std=noise
    )
    ctxs = ntts(params)
    ctxs_ext = ntts_ext(params)
    L = len(moduli)

    sk = pk = rot = None
    flag, length = rd.take("<BQ")
    if flag:
        sk = SecretKey(params, np.frombuffer(rd.take_bytes(length), dtype="<i1").astype(np.int64))
    flag, length = rd.take("<BQ")
    if flag:
        blob = rd.take_bytes(length)
        off = 0
        polys = []
        for _ in range(2 * L):
            limb, off = _limb_from_u64(blob, off, n, ctxs[len(polys) % L])
            polys.append(limb)
        pk = PublicKey(params, polys[:L], polys[L:])
    flag, length = rd.take("<BQ")
    if flag:
        blob = _Reader(rd.take_bytes(length))
        n_steps = blob.take("<H")
        steps, keys = [], {}
        for _ in range(n_steps):
            step = blob.take("<i")
            steps.append(step)
            mats = []
            for _ in range(2):  # B then A
                digits = []
                for _j in range(L):
                    limbs = []
                    for i in range(L + 1):
                        limb, blob.off = _limb_from_u64(blob.data, blob.off, n, ctxs_ext[i])
                        limbs.append(limb)
                    digits.append(limbs)
                mats.append(digits)
            keys[step] = (mats[0], mats[1])
        rot = RotationKeys(params, tuple(steps), keys)
    return params, sk, pk, rot
