"""Negacyclic number-theoretic transform over NTT-friendly prime moduli.

Moduli below 2^31 run fully vectorized in uint64 (products stay under
2^62); larger moduli fall back to numpy object arrays of Python ints so
the same code path handles ~55-bit production primes.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError

_U64_FAST_LIMIT = 1 << 31


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for 64-bit-ish inputs."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_ntt_prime(bits: int, ring_degree: int, avoid=()) -> int:
    """Smallest prime >= 2^bits with p == 1 (mod 2 * ring_degree)."""
    step = 2 * ring_degree
    p = (1 << bits) + 1
    p += (-(p - 1)) % step  # align p - 1 to a multiple of 2N
    while True:
        if p not in avoid and is_prime(p):
            return p
        p += step


def _primitive_2n_root(p: int, n: int) -> int:
    """A primitive 2n-th root of unity mod p (psi with psi^n == -1)."""
    order = 2 * n
    assert (p - 1) % order == 0
    for g in range(2, 1000):
        psi = pow(g, (p - 1) // order, p)
        if pow(psi, n, p) == p - 1:
            return psi
    raise InputError(f"no primitive 2*{n}-th root found mod {p}")


def _bitrev_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


class NttContext:
    """Per-(N, p) transform tables for the negacyclic ring Z_p[X]/(X^N + 1)."""

    def __init__(self, ring_degree: int, prime: int):
        n = ring_degree
        if n < 2 or n & (n - 1):
            raise InputError("ring degree must be a power of two >= 2")
        if (prime - 1) % (2 * n) != 0 or not is_prime(prime):
            raise InputError(f"modulus {prime} is not an NTT prime for degree {n}")
        self.n = n
        self.p = prime
        self.fast = prime < _U64_FAST_LIMIT
        self.dtype = np.uint64 if self.fast else object
        self._p = np.uint64(prime) if self.fast else prime

        psi = _primitive_2n_root(prime, n)
        omega = psi * psi % prime
        self._bitrev = _bitrev_permutation(n)
        self._psi = self._arr([pow(psi, i, prime) for i in range(n)])
        inv_psi = pow(psi, -1, prime)
        inv_n = pow(n, -1, prime)
        self._ipsi = self._arr([pow(inv_psi, i, prime) * inv_n % prime for i in range(n)])
        self._fwd_tw = {}
        self._inv_tw = {}
        inv_omega = pow(omega, -1, prime)
        m = 1
        while m < n:
            stride = n // (2 * m)
            self._fwd_tw[m] = self._arr([pow(omega, stride * j, prime) for j in range(m)])
            self._inv_tw[m] = self._arr([pow(inv_omega, stride * j, prime) for j in range(m)])
            m *= 2

    def _arr(self, values) -> np.ndarray:
        if self.fast:
            return np.asarray(values, dtype=np.uint64)
        out = np.empty(len(values), dtype=object)
        out[:] = [int(v) for v in values]
        return out

    def coerce(self, values) -> np.ndarray:
        """Reduce arbitrary integer coefficients into [0, p) with the native dtype."""
        if self.fast:
            return np.mod(np.asarray(values, dtype=np.int64), self.p).astype(np.uint64)
        vals = [int(v) % self.p for v in np.asarray(values).tolist()]
        return self._arr(vals)

    def _transform(self, a: np.ndarray, tables) -> np.ndarray:
        p = self._p
        x = a[self._bitrev]
        m = 1
        while m < self.n:
            x = x.reshape(-1, 2, m)
            t = (x[:, 1, :] * tables[m]) % p
            even = (x[:, 0, :] + t) % p
            odd = (x[:, 0, :] + (p - t)) % p
            x = np.stack((even, odd), axis=1).reshape(-1)
            m *= 2
        return x

    def forward(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficient -> evaluation domain (negacyclic)."""
        p = self._p
        return self._transform((coeffs * self._psi) % p, self._fwd_tw)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        p = self._p
        return (self._transform(values, self._inv_tw) * self._ipsi) % p

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pointwise product in the evaluation domain."""
        p = self._p
        return (a * b) % p

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        p = self._p
        return (a + b) % p

    def sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        p = self._p
        return (a + (p - b)) % p

    def neg(self, a: np.ndarray) -> np.ndarray:
        p = self._p
        return (p - a) % p

    def scalar_mul(self, a: np.ndarray, c: int) -> np.ndarray:
        c = c % self.p
        if self.fast:
            p = np.uint64(self.p)
            return (a * np.uint64(c)) % p
        return (a * c) % self.p

    def poly_mul(self, a_coeffs: np.ndarray, b_coeffs: np.ndarray) -> np.ndarray:
        """Negacyclic polynomial product in the coefficient domain."""
        return self.inverse(self.mul(self.forward(a_coeffs), self.forward(b_coeffs)))

    def centered(self, a: np.ndarray) -> np.ndarray:
        """Lift [0, p) residues to the centered representative (-p/2, p/2]."""
        if self.fast:
            signed = a.astype(np.int64)
            return np.where(signed > self.p // 2, signed - self.p, signed)
        vals = [int(v) - self.p if int(v) > self.p // 2 else int(v) for v in a.tolist()]
        out = np.empty(len(vals), dtype=object)
        out[:] = vals
        return out
