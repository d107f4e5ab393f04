"""Approximate-arithmetic RLWE scheme: keygen, encrypt/decrypt, ciphertext
addition, slot rotation, plaintext multiplication and plaintext-matrix x
ciphertext-vector products via the generalized-diagonal method.

Only the operations the single-round protocol needs are implemented: no
ciphertext-ciphertext multiplication, no rescaling chain, no bootstrapping.
Rotations use hybrid key switching with one extra prime: ciphertexts are
decomposed into their RNS digits and the key-switch keys carry the digits
premultiplied by the extra prime, which keeps the added noise near the
fresh-encryption level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CryptoError, InputError
from .params import HeParams, decode_coefficients, encode_coefficients, ntts, ntts_ext

_SCALE_RTOL = 1e-9


@dataclass
class SecretKey:
    params: HeParams
    s: np.ndarray  # ternary coefficients, int8, length N
    _s_ntt: list = field(default=None, repr=False)

    def s_ntt(self):
        if self._s_ntt is None:
            self._s_ntt = [ctx.forward(ctx.coerce(self.s)) for ctx in ntts_ext(self.params)]
        return self._s_ntt


@dataclass
class PublicKey:
    params: HeParams
    b: list  # per ciphertext limb, coefficient domain
    a: list
    _ntt: tuple = field(default=None, repr=False)

    def ntt(self):
        if self._ntt is None:
            ctxs = ntts(self.params)
            self._ntt = (
                [c.forward(x) for c, x in zip(ctxs, self.b)],
                [c.forward(x) for c, x in zip(ctxs, self.a)],
            )
        return self._ntt


@dataclass
class RotationKeys:
    params: HeParams
    steps: tuple
    # keys[step] = (B, A): per digit j (one per ciphertext limb), per limb i
    # (ciphertext limbs + key-switch limb), coefficient domain.
    keys: dict
    _ntt: dict = field(default_factory=dict, repr=False)

    def ntt(self, step):
        if step not in self._ntt:
            ctxs = ntts_ext(self.params)
            B, A = self.keys[step]
            self._ntt[step] = (
                [[ctxs[i].forward(poly) for i, poly in enumerate(digit)] for digit in B],
                [[ctxs[i].forward(poly) for i, poly in enumerate(digit)] for digit in A],
            )
        return self._ntt[step]


@dataclass
class Ciphertext:
    """RLWE pair in RNS coefficient form with scale/level metadata."""

    params: HeParams
    c0: list
    c1: list
    scale: float
    level: int = 0

    def __add__(self, other):
        return add_ct(self, other)

    def copy(self) -> "Ciphertext":
        return Ciphertext(
            self.params,
            [x.copy() for x in self.c0],
            [x.copy() for x in self.c1],
            self.scale,
            self.level,
        )


def _sample_gaussian(rng, params: HeParams) -> np.ndarray:
    return np.round(rng.normal(0.0, params.noise_std, params.ring_degree)).astype(np.int64)


def _sample_ternary(rng, n: int) -> np.ndarray:
    return rng.integers(-1, 2, n).astype(np.int64)


def _uniform_limbs(rng, params: HeParams, extended: bool):
    """Uniform ring element sampled directly in per-limb NTT form."""
    ctxs = ntts_ext(params) if extended else ntts(params)
    out = []
    for ctx in ctxs:
        vals = rng.integers(0, ctx.p, params.ring_degree, dtype=np.int64)
        out.append(vals.astype(np.uint64) if ctx.fast else ctx._arr(vals.tolist()))
    return out


def galois_element(step: int, ring_degree: int) -> int:
    return pow(5, step, 2 * ring_degree)


def automorphism(coeffs: np.ndarray, g: int, ctx) -> np.ndarray:
    """Apply X -> X^g to a residue polynomial (negacyclic sign rule)."""
    n = ctx.n
    idx = (np.arange(n) * g) % (2 * n)
    neg = idx >= n
    pos = idx % n
    out = np.zeros_like(coeffs)
    out[pos] = np.where(neg, ctx.neg(coeffs), coeffs)
    return out


def keygen(params: HeParams, rotation_steps, seed: int):
    """Deterministic key generation: secret, public and rotation keys."""
    rng = np.random.default_rng(seed)
    n = params.ring_degree
    sk = SecretKey(params, _sample_ternary(rng, n))
    ctxs = ntts_ext(params)
    L = len(params.moduli)
    s_ntt = sk.s_ntt()

    a_ntt = _uniform_limbs(rng, params, extended=False)
    e = _sample_gaussian(rng, params)
    b_coeffs, a_coeffs = [], []
    for i in range(L):
        ctx = ctxs[i]
        b_ntt = ctx.add(ctx.neg(ctx.mul(a_ntt[i], s_ntt[i])), ctx.forward(ctx.coerce(e)))
        b_coeffs.append(ctx.inverse(b_ntt))
        a_coeffs.append(ctx.inverse(a_ntt[i]))
    pk = PublicKey(params, b_coeffs, a_coeffs)

    steps = tuple(dict.fromkeys(int(s) for s in rotation_steps))
    keys = {}
    P = params.ks_prime
    for step in steps:
        g = galois_element(step, n)
        B_digits, A_digits = [], []
        for j in range(L):
            a_j = _uniform_limbs(rng, params, extended=True)
            e_j = _sample_gaussian(rng, params)
            p_factor = P % params.moduli[j]
            B_limbs, A_limbs = [], []
            for i in range(L + 1):
                ctx = ctxs[i]
                b = ctx.neg(ctx.mul(a_j[i], s_ntt[i]))
                b = ctx.add(b, ctx.forward(ctx.coerce(e_j)))
                if i == j:
                    s_rot = automorphism(ctx.coerce(sk.s), g, ctx)
                    b = ctx.add(b, ctx.scalar_mul(ctx.forward(s_rot), p_factor))
                B_limbs.append(ctx.inverse(b))
                A_limbs.append(ctx.inverse(a_j[i]))
            B_digits.append(B_limbs)
            A_digits.append(A_limbs)
        keys[step] = (B_digits, A_digits)
    return sk, pk, RotationKeys(params, steps, keys)


def encrypt(v, pk: PublicKey, rng, scale: float = None) -> Ciphertext:
    params = pk.params
    scale = scale if scale is not None else params.scale
    m = encode_coefficients(v, params, scale)
    ctxs = ntts(params)
    u = _sample_ternary(rng, params.ring_degree)
    e0 = _sample_gaussian(rng, params)
    e1 = _sample_gaussian(rng, params)
    b_ntt, a_ntt = pk.ntt()
    c0, c1 = [], []
    for i, ctx in enumerate(ctxs):
        u_ntt = ctx.forward(ctx.coerce(u))
        x0 = ctx.inverse(ctx.mul(b_ntt[i], u_ntt))
        x0 = ctx.add(x0, ctx.coerce(e0 + m))
        x1 = ctx.inverse(ctx.mul(a_ntt[i], u_ntt))
        x1 = ctx.add(x1, ctx.coerce(e1))
        c0.append(x0)
        c1.append(x1)
    return Ciphertext(params, c0, c1, scale)


def _crt_compose(limbs, params: HeParams):
    """Per-limb residues -> centered Python-int coefficients mod q."""
    q = params.modulus_product
    acc = np.zeros(params.ring_degree, dtype=object)
    for res, p in zip(limbs, params.moduli):
        qi = q // p
        g = qi * pow(qi, -1, p) % q
        vals = np.asarray([int(x) for x in res], dtype=object)
        acc = (acc + vals * g) % q
    half = q // 2
    return np.asarray([x - q if x > half else x for x in acc], dtype=object)


def decrypt(ct: Ciphertext, sk: SecretKey) -> np.ndarray:
    """Full slot vector; callers slice to the length they encrypted."""
    if sk is None:
        raise CryptoError("decryption requires the secret key")
    params = ct.params
    ctxs = ntts(params)
    s_ntt = sk.s_ntt()
    limbs = []
    for i, ctx in enumerate(ctxs):
        m = ctx.add(ct.c0[i], ctx.inverse(ctx.mul(ctx.forward(ct.c1[i]), s_ntt[i])))
        limbs.append(m)
    coeffs = _crt_compose(limbs, params)
    return decode_coefficients(coeffs, params, ct.scale)


def _check_compatible(a: Ciphertext, b: Ciphertext):
    if a.params != b.params or a.level != b.level:
        raise InputError("ciphertext metadata mismatch (params/level)")
    if abs(a.scale - b.scale) > _SCALE_RTOL * max(a.scale, b.scale):
        raise InputError(f"ciphertext scale mismatch: {a.scale} vs {b.scale}")


def add_ct(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    _check_compatible(a, b)
    ctxs = ntts(a.params)
    c0 = [ctx.add(x, y) for ctx, x, y in zip(ctxs, a.c0, b.c0)]
    c1 = [ctx.add(x, y) for ctx, x, y in zip(ctxs, a.c1, b.c1)]
    return Ciphertext(a.params, c0, c1, a.scale, a.level)


def add_many(cts) -> Ciphertext:
    """Balanced pairwise fold of ciphertext additions."""
    cts = list(cts)
    if not cts:
        raise InputError("add_many requires at least one ciphertext")
    while len(cts) > 1:
        nxt = [add_ct(cts[i], cts[i + 1]) for i in range(0, len(cts) - 1, 2)]
        if len(cts) % 2:
            nxt.append(cts[-1])
        cts = nxt
    return cts[0]


def _keyswitch(params: HeParams, c1_limbs, B_ntt, A_ntt):
    """Switch c1 (coefficient RNS form) to the base key; returns the pair of
    correction polynomials already scaled down by the key-switch prime."""
    ctxs = ntts_ext(params)
    L = len(params.moduli)
    t0 = [None] * (L + 1)
    t1 = [None] * (L + 1)
    for j in range(L):
        digit = ctxs[j].centered(c1_limbs[j])
        for i in range(L + 1):
            ctx = ctxs[i]
            d_ntt = ctx.forward(ctx.coerce(digit))
            u0 = ctx.mul(d_ntt, B_ntt[j][i])
            u1 = ctx.mul(d_ntt, A_ntt[j][i])
            t0[i] = u0 if t0[i] is None else ctx.add(t0[i], u0)
            t1[i] = u1 if t1[i] is None else ctx.add(t1[i], u1)
    t0 = [ctxs[i].inverse(t0[i]) for i in range(L + 1)]
    t1 = [ctxs[i].inverse(t1[i]) for i in range(L + 1)]
    return _mod_down(params, t0), _mod_down(params, t1)


def _mod_down(params: HeParams, limbs):
    """Divide an extended-basis element by the key-switch prime with rounding."""
    ctxs = ntts_ext(params)
    L = len(params.moduli)
    u = ctxs[L].centered(limbs[L])
    out = []
    for i in range(L):
        ctx = ctxs[i]
        p_inv = pow(params.ks_prime, -1, ctx.p)
        if ctx.fast:
            diff = (limbs[i].astype(np.int64) - u) % ctx.p
            out.append(ctx.scalar_mul(diff.astype(np.uint64), p_inv))
        else:
            diff = ctx.coerce(np.asarray([int(a) - int(b) for a, b in zip(limbs[i], u)], dtype=object))
            out.append(ctx.scalar_mul(diff, p_inv))
    return out


def rotate(ct: Ciphertext, step: int, rot: RotationKeys) -> Ciphertext:
    """Cyclically shift slots left by `step` (right for negative steps)."""
    if step == 0:
        return ct.copy()
    if rot is None or step not in rot.steps:
        raise CryptoError(f"rotation step {step} was not declared at keygen")
    params = ct.params
    ctxs = ntts(params)
    g = galois_element(step, params.ring_degree)
    c0r = [automorphism(x, g, ctx) for x, ctx in zip(ct.c0, ctxs)]
    c1r = [automorphism(x, g, ctx) for x, ctx in zip(ct.c1, ctxs)]
    B_ntt, A_ntt = rot.ntt(step)
    d0, d1 = _keyswitch(params, c1r, B_ntt, A_ntt)
    c0 = [ctx.add(x, y) for ctx, x, y in zip(ctxs, c0r, d0)]
    return Ciphertext(params, c0, d1, ct.scale, ct.level)


def mul_plain(ct: Ciphertext, plain_vec, scale: float = None) -> Ciphertext:
    """Entrywise product with a plaintext vector; consumes the single
    multiplication level (result scale is the product of scales)."""
    params = ct.params
    scale = scale if scale is not None else params.scale
    if ct.scale * scale >= params.modulus_product / (1 << 10):
        raise CryptoError("multiplication level exhausted for these parameters")
    m = encode_coefficients(plain_vec, params, scale)
    ctxs = ntts(params)
    c0, c1 = [], []
    for i, ctx in enumerate(ctxs):
        p_ntt = ctx.forward(ctx.coerce(m))
        c0.append(ctx.inverse(ctx.mul(ctx.forward(ct.c0[i]), p_ntt)))
        c1.append(ctx.inverse(ctx.mul(ctx.forward(ct.c1[i]), p_ntt)))
    return Ciphertext(params, c0, c1, ct.scale * scale, ct.level)


def _generalized_diagonal(A: np.ndarray, r: int, slots: int) -> np.ndarray:
    d = A.shape[0]
    j = np.arange(slots)
    col = (j + r) % slots
    diag = np.zeros(slots)
    mask = (j < d) & (col < d)
    diag[mask] = A[j[mask], col[mask]]
    return diag


def matvec_plain(A: np.ndarray, ct: Ciphertext, rot: RotationKeys) -> Ciphertext:
    """Generalized-diagonal product: sum over rotations of diagonal-masked
    plaintext multiplications.  Rotations are chained by +/-1 steps, so only
    those two steps need declared keys."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("matvec requires a square matrix")
    params = ct.params
    d = A.shape[0]
    slots = params.slot_count
    if d > slots:
        raise InputError(f"matrix dimension {d} exceeds {slots} slots")
    if rot is None or 1 not in rot.steps or (-1 not in rot.steps and d > 1):
        raise CryptoError("matvec requires declared rotation steps +1 and -1")

    pos = list(range(0, d))
    neg = [r for r in range(slots - 1, slots - d, -1) if r not in pos]
    acc = None
    cur = ct
    for r in pos:
        if r > 0:
            cur = rotate(cur, 1, rot)
        diag = _generalized_diagonal(A, r, slots)
        if np.any(diag):
            term = mul_plain(cur, diag)
            acc = term if acc is None else add_ct(acc, term)
    cur = ct
    for r in neg:
        cur = rotate(cur, -1, rot)
        diag = _generalized_diagonal(A, r, slots)
        if np.any(diag):
            term = mul_plain(cur, diag)
            acc = term if acc is None else add_ct(acc, term)
    if acc is None:  # zero matrix: still produce a well-formed level-consumed result
        acc = mul_plain(ct, np.zeros(slots))
    return acc
