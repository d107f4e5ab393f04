"""Scheme parameters and the canonical-embedding codec."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from .ntt import NttContext, find_ntt_prime, is_prime


@functools.lru_cache(maxsize=None)
def _default_primes(ring_degree: int, bits: int, count: int):
    primes = []
    for _ in range(count):
        primes.append(find_ntt_prime(bits, ring_degree, avoid=tuple(primes)))
    return tuple(primes)


@dataclass(frozen=True)
class HeParams:
    """RLWE parameters: ring degree, ciphertext prime chain, and one extra
    key-switching prime used only inside rotations."""

    ring_degree: int = 8192
    moduli: tuple = ()
    ks_prime: int = 0
    scale: float = float(1 << 40)
    noise_std: float = 3.2
    secret_distribution: str = "ternary"

    def __post_init__(self):
        n = self.ring_degree
        if n < 8 or n & (n - 1):
            raise InputError("ring_degree must be a power of two >= 8")
        if not self.moduli:
            object.__setattr__(self, "moduli", _default_primes(n, 55, 2))
        if not self.ks_prime:
            object.__setattr__(
                self, "ks_prime", find_ntt_prime(max(p.bit_length() for p in self.moduli), n, avoid=self.moduli)
            )
        for p in tuple(self.moduli) + (self.ks_prime,):
            if (p - 1) % (2 * n) != 0 or not is_prime(p):
                raise InputError(f"modulus {p} must be a prime == 1 mod {2 * n}")
        if len(set(self.moduli)) != len(self.moduli) or self.ks_prime in self.moduli:
            raise InputError("moduli must be distinct")
        if self.scale <= 1:
            raise InputError("scale must exceed 1")
        q = 1
        for p in self.moduli:
            q *= p
        if self.scale * self.scale >= q / (1 << 20):
            raise InputError("scale^2 must leave 2^20 headroom below the modulus product")
        if self.secret_distribution != "ternary":
            raise InputError("only ternary secrets are supported")

    @classmethod
    def desk(cls, ring_degree: int = 512) -> "HeParams":
        """Small, fast profile for desk-scale runs and tests (moduli < 2^31,
        so every transform stays on the vectorized uint64 path)."""
        primes = _default_primes(ring_degree, 30, 4)
        return cls(
            ring_degree=ring_degree,
            moduli=primes[:3],
            ks_prime=primes[3],
            scale=float(1 << 30),
        )

    @property
    def slot_count(self) -> int:
        return self.ring_degree // 2

    @property
    def modulus_product(self) -> int:
        q = 1
        for p in self.moduli:
            q *= p
        return q

    def __hash__(self):
        return hash((self.ring_degree, self.moduli, self.ks_prime, self.scale, self.noise_std))


@functools.lru_cache(maxsize=None)
def _ntt_cache(ring_degree: int, prime: int) -> NttContext:
    return NttContext(ring_degree, prime)


def ntts(params: HeParams):
    """NTT contexts for the ciphertext limbs."""
    return [_ntt_cache(params.ring_degree, p) for p in params.moduli]


def ntts_ext(params: HeParams):
    """NTT contexts for ciphertext limbs plus the key-switching prime."""
    return ntts(params) + [_ntt_cache(params.ring_degree, params.ks_prime)]


@functools.lru_cache(maxsize=None)
def _rot_group(ring_degree: int) -> np.ndarray:
    """Slot ordering: powers of 5 modulo 2N index the odd roots of unity."""
    two_n = 2 * ring_degree
    out = np.empty(ring_degree // 2, dtype=np.int64)
    g = 1
    for j in range(ring_degree // 2):
        out[j] = g
        g = g * 5 % two_n
    return out


MAX_ENCODE_MAGNITUDE = float(1 << 20)


def encode_coefficients(v, params: HeParams, scale: float) -> np.ndarray:
    """Real slot vector -> integer polynomial coefficients (canonical embedding,
    conjugate-symmetric), as Python ints rounded at the given scale."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InputError("encode expects a 1-D vector")
    n = params.ring_degree
    slots = params.slot_count
    if v.size > slots:
        raise InputError(f"vector of length {v.size} exceeds {slots} slots")
    if v.size and np.max(np.abs(v)) > MAX_ENCODE_MAGNITUDE:
        raise InputError("encode magnitude bound exceeded (|v| must be <= 2^20)")
    z = np.zeros(slots, dtype=np.complex128)
    z[: v.size] = v
    a = np.zeros(2 * n, dtype=np.complex128)
    a[_rot_group(n)] = z
    spectrum = np.fft.fft(a)[:n]
    coeffs = np.round((2.0 / n) * spectrum.real * scale)
    return coeffs.astype(np.int64)


def decode_coefficients(coeffs, params: HeParams, scale: float) -> np.ndarray:
    """Integer (or float) polynomial coefficients -> real slot vector."""
    n = params.ring_degree
    c = np.zeros(2 * n, dtype=np.complex128)
    c[:n] = np.asarray(coeffs, dtype=np.float64)
    evals = 2 * n * np.fft.ifft(c)
    z = evals[_rot_group(n)]
    return z.real / scale
