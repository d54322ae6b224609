"""Signature, hybrid encryption, hashing and identity-derived keys.

Every key carries the name of the scheme that produced it, so the module-level
functions (`sign`, `verify`, `encrypt`, ...) dispatch on the key. Two schemes
are registered:

``ecdsa-p256``
    ECDSA over NIST P-256 with RFC 6979 deterministic nonces, and ECIES-style
    hybrid encryption (ephemeral ECDH, HKDF-SHA256, AES-256-GCM). Default.
``toy-schnorr``
    Schnorr signatures in the order-q subgroup of a 256-bit safe-prime field.
    Fast and deterministic, meant for property tests only; a 256-bit prime
    field offers no real security.

Both schemes use the same wire sizes: 33-octet public keys, 32-octet private
keys and 64-octet signatures.

Identity-based keys are emulated. `setup_master` holds a secret from which the
private key of any identity string is derived with HMAC; the published
`PublicParams` carry a derivation oracle that only ever hands out *public*
keys, which is the one property of pairing-based IBE the protocol relies on.
"""

from __future__ import annotations

import hashlib
import hmac
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import AuthorizationError, CorruptKeyError, DecryptionError

PUBLIC_KEY_LEN = 33
PRIVATE_KEY_LEN = 32
SIGNATURE_LEN = 64
DIGEST_LEN = 32

DEFAULT_SCHEME = "ecdsa-p256"
TOY_SCHEME = "toy-schnorr"

Signature = bytes
Digest = bytes
Seed = Union[bytes, int, str, None]


@dataclass(frozen=True)
class PublicKey:
    scheme: str
    data: bytes

    def __bytes__(self) -> bytes:
        return self.data


@dataclass(frozen=True)
class PrivateKey:
    scheme: str
    data: bytes = field(repr=False)


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    private: PrivateKey


def digest(data: bytes) -> Digest:
    """SHA-256 of ``data``."""
    return hashlib.sha256(data).digest()


def _seed_bytes(seed: Seed) -> bytes:
    if seed is None:
        return os.urandom(32)
    if isinstance(seed, int):
        return seed.to_bytes((seed.bit_length() + 8) // 8, "big", signed=True)
    if isinstance(seed, str):
        return seed.encode()
    return bytes(seed)


def _scalar_from_seed(seed: bytes, order: int, label: bytes) -> int:
    counter = 0
    while True:
        h = hashlib.sha256(label + counter.to_bytes(4, "big") + seed).digest()
        x = int.from_bytes(h, "big")
        if 0 < x < order:
            return x
        counter += 1


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------


class _EcdsaP256:
    name = DEFAULT_SCHEME
    curve = ec.SECP256R1()
    order = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
    _alg = ec.ECDSA(hashes.SHA256(), deterministic_signing=True)

    def scalar(self, seed: bytes) -> int:
        return _scalar_from_seed(seed, self.order, b"coopauth/p256")

    def _private(self, data: bytes) -> ec.EllipticCurvePrivateKey:
        x = int.from_bytes(data, "big")
        if len(data) != PRIVATE_KEY_LEN or not 0 < x < self.order:
            raise CorruptKeyError("P-256 private scalar out of range")
        return _p256_private(x)

    def public_from_private(self, data: bytes) -> bytes:
        return _p256_public_bytes(self._private(data))

    def sign(self, priv: bytes, message: bytes) -> bytes:
        der = self._private(priv).sign(message, self._alg)
        r, s = decode_dss_signature(der)
        return r.to_bytes(32, "big") + s.to_bytes(32, "big")

    def verify(self, pub: bytes, message: bytes, sig: bytes) -> bool:
        try:
            key = _p256_public(pub)
        except ValueError:
            return False
        r = int.from_bytes(sig[:32], "big")
        s = int.from_bytes(sig[32:], "big")
        if not (0 < r < self.order and 0 < s < self.order):
            return False
        try:
            key.verify(encode_dss_signature(r, s), message, self._alg)
        except InvalidSignature:
            return False
        return True

    def _kdf(self, shared: bytes, eph: bytes, peer: bytes) -> bytes:
        return HKDF(
            algorithm=hashes.SHA256(),
            length=32,
            salt=None,
            info=b"coopauth-ecies" + eph + peer,
        ).derive(shared)

    def encrypt(self, pub: bytes, plaintext: bytes, entropy: bytes) -> bytes:
        try:
            peer = _p256_public(pub)
        except ValueError as exc:
            raise CorruptKeyError("invalid P-256 public key") from exc
        eph = _p256_private(self.scalar(entropy))
        eph_pub = _p256_public_bytes(eph)
        key = self._kdf(eph.exchange(ec.ECDH(), peer), eph_pub, pub)
        return eph_pub + AESGCM(key).encrypt(bytes(12), plaintext, None)

    def decrypt(self, priv: bytes, ct: bytes) -> bytes:
        me = self._private(priv)
        eph_pub, body = ct[:PUBLIC_KEY_LEN], ct[PUBLIC_KEY_LEN:]
        try:
            eph = _p256_public(eph_pub)
            shared = me.exchange(ec.ECDH(), eph)
            key = self._kdf(shared, eph_pub, _p256_public_bytes(me))
            return AESGCM(key).decrypt(bytes(12), body, None)
        except (ValueError, InvalidTag) as exc:
            raise DecryptionError("ciphertext rejected") from exc


@lru_cache(maxsize=4096)
def _p256_private(x: int) -> ec.EllipticCurvePrivateKey:
    return ec.derive_private_key(x, ec.SECP256R1())


@lru_cache(maxsize=1 << 14)
def _p256_public(data: bytes) -> ec.EllipticCurvePublicKey:
    if len(data) != PUBLIC_KEY_LEN:
        raise ValueError("bad point length")
    return ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), data)


def _p256_public_bytes(key: ec.EllipticCurvePrivateKey) -> bytes:
    return key.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
    )


class _ToySchnorr:
    name = TOY_SCHEME
    # safe prime P = 2Q + 1; G = 4 generates the order-Q subgroup
    P = 0xE37A1CFCDFDB2762E0D02F767877115ECC1F9866C60826196D0D0DADBCA39E67
    Q = 0x71BD0E7E6FED93B1706817BB3C3B88AF660FCC336304130CB68686D6DE51CF33
    G = 4
    order = Q

    def scalar(self, seed: bytes) -> int:
        return _scalar_from_seed(seed, self.Q, b"coopauth/toy")

    def _x(self, data: bytes) -> int:
        x = int.from_bytes(data, "big")
        if len(data) != PRIVATE_KEY_LEN or not 0 < x < self.Q:
            raise CorruptKeyError("toy private scalar out of range")
        return x

    def _y(self, pub: bytes) -> int | None:
        if len(pub) != PUBLIC_KEY_LEN or pub[0] != 0:
            return None
        y = int.from_bytes(pub[1:], "big")
        if not 1 < y < self.P or pow(y, self.Q, self.P) != 1:
            return None
        return y

    def _pub(self, y: int) -> bytes:
        return b"\x00" + y.to_bytes(32, "big")

    def _challenge(self, r: int, pub: bytes, message: bytes) -> int:
        h = hashlib.sha256(r.to_bytes(32, "big") + pub + message).digest()
        return int.from_bytes(h, "big") % self.Q

    def public_from_private(self, data: bytes) -> bytes:
        return self._pub(pow(self.G, self._x(data), self.P))

    def sign(self, priv: bytes, message: bytes) -> bytes:
        x = self._x(priv)
        pub = self._pub(pow(self.G, x, self.P))
        k = self.scalar(priv + message)
        e = self._challenge(pow(self.G, k, self.P), pub, message)
        s = (k - x * e) % self.Q
        return e.to_bytes(32, "big") + s.to_bytes(32, "big")

    def verify(self, pub: bytes, message: bytes, sig: bytes) -> bool:
        y = self._y(pub)
        if y is None:
            return False
        e = int.from_bytes(sig[:32], "big")
        s = int.from_bytes(sig[32:], "big")
        if e >= self.Q or s >= self.Q:
            return False
        r = pow(self.G, s, self.P) * pow(y, e, self.P) % self.P
        return self._challenge(r, pub, message) == e

    def encrypt(self, pub: bytes, plaintext: bytes, entropy: bytes) -> bytes:
        y = self._y(pub)
        if y is None:
            raise CorruptKeyError("invalid toy public key")
        k = self.scalar(entropy)
        r = pow(self.G, k, self.P).to_bytes(32, "big")
        key = hashlib.sha256(pow(y, k, self.P).to_bytes(32, "big") + r).digest()
        return r + AESGCM(key).encrypt(bytes(12), plaintext, None)

    def decrypt(self, priv: bytes, ct: bytes) -> bytes:
        x = self._x(priv)
        r = int.from_bytes(ct[:32], "big")
        if len(ct) < 32 or not 1 < r < self.P:
            raise DecryptionError("ciphertext rejected")
        key = hashlib.sha256(pow(r, x, self.P).to_bytes(32, "big") + ct[:32]).digest()
        try:
            return AESGCM(key).decrypt(bytes(12), ct[32:], None)
        except InvalidTag as exc:
            raise DecryptionError("ciphertext rejected") from exc


_SCHEMES = {s.name: s for s in (_EcdsaP256(), _ToySchnorr())}


def available_schemes() -> tuple[str, ...]:
    return tuple(_SCHEMES)


def _scheme(name: str):
    try:
        return _SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown crypto scheme {name!r}") from None


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def keygen(seed: Seed = None, scheme: str = DEFAULT_SCHEME) -> KeyPair:
    """Generate a keypair; equal seeds give equal keypairs, ``None`` draws OS entropy."""
    impl = _scheme(scheme)
    x = impl.scalar(_seed_bytes(seed))
    priv = x.to_bytes(PRIVATE_KEY_LEN, "big")
    return KeyPair(PublicKey(scheme, impl.public_from_private(priv)), PrivateKey(scheme, priv))


def public_of(private: PrivateKey) -> PublicKey:
    return PublicKey(private.scheme, _scheme(private.scheme).public_from_private(private.data))


def sign(private: PrivateKey, message: bytes) -> Signature:
    if not isinstance(private, PrivateKey):
        raise CorruptKeyError("not a private key")
    return _scheme(private.scheme).sign(private.data, bytes(message))


def verify(public: PublicKey, message: bytes, sig: Signature) -> bool:
    """True iff ``sig`` was made over ``message`` by the key matching ``public``.

    Malformed inputs yield False. Results are memoised: verification is a pure
    function and the simulator checks the same beacon at many receivers.
    """
    if not isinstance(public, PublicKey) or len(sig) != SIGNATURE_LEN:
        return False
    return _verify_cached(public.scheme, public.data, bytes(message), bytes(sig))


@lru_cache(maxsize=1 << 16)
def _verify_cached(scheme: str, pub: bytes, message: bytes, sig: bytes) -> bool:
    impl = _SCHEMES.get(scheme)
    if impl is None:
        return False
    return impl.verify(pub, message, sig)


def encrypt(public: PublicKey, plaintext: bytes, entropy: bytes | None = None) -> bytes:
    """Hybrid public-key encryption of an arbitrary-length plaintext.

    ``entropy`` seeds the ephemeral key; pass it only where reproducibility
    matters (the simulator), never reuse it across messages.
    """
    return _scheme(public.scheme).encrypt(public.data, bytes(plaintext), _seed_bytes(entropy))


def decrypt(private: PrivateKey, ciphertext: bytes) -> bytes:
    return _scheme(private.scheme).decrypt(private.data, bytes(ciphertext))


# ---------------------------------------------------------------------------
# Identity-derived keys
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PublicParams:
    """Published half of the master parameters.

    ``data`` is the published octet string (scheme name and a commitment to
    the master secret). ``_oracle`` maps identity strings to public keys.
    """

    scheme: str
    data: bytes
    _oracle: Callable[[str], bytes] = field(repr=False, compare=False)


@dataclass(frozen=True)
class MasterParams:
    master_secret: bytes | None = field(repr=False)
    public_params: PublicParams


def setup_master(seed: Seed = None, scheme: str = DEFAULT_SCHEME) -> MasterParams:
    secret = hashlib.sha256(b"coopauth/master" + _seed_bytes(seed)).digest()
    impl = _scheme(scheme)

    @lru_cache(maxsize=1024)
    def oracle(identity: str) -> bytes:
        return impl.public_from_private(_identity_scalar(secret, scheme, identity))

    data = scheme.encode() + b"\x00" + digest(b"coopauth/commit" + secret)
    return MasterParams(secret, PublicParams(scheme, data, oracle))


def _identity_scalar(secret: bytes, scheme: str, identity: str) -> bytes:
    seed = hmac.new(secret, identity.encode(), hashlib.sha256).digest()
    return _scheme(scheme).scalar(seed).to_bytes(PRIVATE_KEY_LEN, "big")


def derive_identity_public(params: PublicParams | MasterParams, identity: str) -> PublicKey:
    if isinstance(params, MasterParams):
        params = params.public_params
    if not identity:
        raise ValueError("identity must be non-empty")
    return PublicKey(params.scheme, params._oracle(identity))


def derive_identity_private(master: MasterParams, identity: str) -> PrivateKey:
    if not isinstance(master, MasterParams) or master.master_secret is None:
        raise AuthorizationError("deriving an identity private key needs the master secret")
    if not identity:
        raise ValueError("identity must be non-empty")
    scheme = master.public_params.scheme
    return PrivateKey(scheme, _identity_scalar(master.master_secret, scheme, identity))
