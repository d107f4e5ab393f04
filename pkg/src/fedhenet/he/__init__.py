from .ckks import (
    Ciphertext,
    PublicKey,
    RotationKeys,
    SecretKey,
    add_ct,
    add_many,
    decrypt,
    encrypt,
    keygen,
    matvec_plain,
    mul_plain,
    rotate,
)
from .context import (
    BACKEND_CKKS,
    BACKEND_MOCK,
    ROLE_CLIENT,
    ROLE_COORDINATOR,
    EncryptionContext,
    default_rotation_steps,
)
from .mock import MockCiphertext
from .params import HeParams, decode_coefficients, encode_coefficients
from .serial import ciphertext_bytes, deserialize_ct, load_keys, save_keys, serialize_ct

__all__ = [
    "Ciphertext",
    "PublicKey",
    "RotationKeys",
    "SecretKey",
    "MockCiphertext",
    "HeParams",
    "EncryptionContext",
    "BACKEND_CKKS",
    "BACKEND_MOCK",
    "ROLE_CLIENT",
    "ROLE_COORDINATOR",
    "keygen",
    "encrypt",
    "decrypt",
    "add_ct",
    "add_many",
    "rotate",
    "mul_plain",
    "matvec_plain",
    "encode_coefficients",
    "decode_coefficients",
    "serialize_ct",
    "deserialize_ct",
    "ciphertext_bytes",
    "save_keys",
    "load_keys",
    "default_rotation_steps",
]
