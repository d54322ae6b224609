"""Certificates, revocation lists and their canonical byte encodings.

Layout rules: fields in declaration order, unsigned integers big-endian,
timestamps as big-endian IEEE-754 doubles (seconds), public keys as their
33-octet encoding prefixed by nothing; the scheme of an embedded key is the
scheme of the decoding context.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from . import crypto
from .crypto import PUBLIC_KEY_LEN, SIGNATURE_LEN, PublicKey
from .errors import DecodeError

TEMP_CERT_LEN = PUBLIC_KEY_LEN + 8 + 8 + SIGNATURE_LEN
LONG_TERM_CERT_LEN = PUBLIC_KEY_LEN + 8 + 8 + SIGNATURE_LEN
HISTORY_ENTRY_LEN = 8 + PUBLIC_KEY_LEN + LONG_TERM_CERT_LEN + 8

_U64 = struct.Struct(">Q")
_F64 = struct.Struct(">d")


@dataclass(frozen=True)
class LongTermCert:
    vehicle_public_key: PublicKey
    serial: int
    issued_at: float
    authority_signature: bytes

    def tbs(self) -> bytes:
        """The bytes covered by the authority signature."""
        return (
            self.vehicle_public_key.data + _U64.pack(self.serial) + _F64.pack(self.issued_at)
        )

    def verify(self, authority_public: PublicKey) -> bool:
        return crypto.verify(authority_public, self.tbs(), self.authority_signature)


@dataclass(frozen=True)
class TempCert:
    pseudo_public_key: PublicKey
    expiration: float
    pseudo_id: int
    rsu_signature: bytes

    def tbs(self) -> bytes:
        return (
            self.pseudo_public_key.data + _F64.pack(self.expiration) + _U64.pack(self.pseudo_id)
        )


@dataclass(frozen=True)
class HistoryEntry:
    pseudo_id: int
    pseudo_public_key: PublicKey
    long_term_cert: LongTermCert
    issued_at: float


@dataclass(frozen=True)
class RevocationList:
    version: int = 0
    revoked_serials: frozenset[int] = field(default_factory=frozenset)

    def __contains__(self, serial: int) -> bool:
        return serial in self.revoked_serials


class CertStatus(enum.Enum):
    VALID = "valid"
    EXPIRED = "expired"
    BAD_SIGNATURE = "bad_signature"


def sign_temp_cert(rsu_private, pseudo_public_key: PublicKey, expiration: float, pseudo_id: int) -> TempCert:
    unsigned = TempCert(pseudo_public_key, expiration, pseudo_id, b"")
    return TempCert(pseudo_public_key, expiration, pseudo_id, crypto.sign(rsu_private, unsigned.tbs()))


def check_temp_cert(cert: TempCert, issuer_public: PublicKey, now: float) -> CertStatus:
    if cert.pseudo_public_key.scheme != issuer_public.scheme or not crypto.verify(
        issuer_public, cert.tbs(), cert.rsu_signature
    ):
        return CertStatus.BAD_SIGNATURE
    if now >= cert.expiration:
        return CertStatus.EXPIRED
    return CertStatus.VALID


# ---------------------------------------------------------------------------
# Revocation list
# ---------------------------------------------------------------------------


def rl_contains(rl: RevocationList, serial: int) -> bool:
    return serial in rl.revoked_serials


def rl_add(rl: RevocationList, serial: int) -> RevocationList:
    return RevocationList(rl.version + 1, rl.revoked_serials | {serial})


def rl_merge(a: RevocationList, b: RevocationList) -> RevocationList:
    return RevocationList(max(a.version, b.version), a.revoked_serials | b.revoked_serials)


# ---------------------------------------------------------------------------
# Encodings
# ---------------------------------------------------------------------------


class Reader:
    """Cursor over a byte string that raises DecodeError on truncation."""

    def __init__(self, data: bytes, scheme: str = crypto.DEFAULT_SCHEME):
        self.data = bytes(data)
        self.pos = 0
        self.scheme = scheme

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(f"truncated: need {n} octets at offset {self.pos}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def i64(self) -> int:
        return int.from_bytes(self.take(8), "big", signed=True)

    def f64(self) -> float:
        return _F64.unpack(self.take(8))[0]

    def public_key(self) -> PublicKey:
        return PublicKey(self.scheme, self.take(PUBLIC_KEY_LEN))

    def signature(self) -> bytes:
        return self.take(SIGNATURE_LEN)

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError(f"{len(self.data) - self.pos} trailing octets")


def _key_bytes(key: PublicKey) -> bytes:
    if len(key.data) != PUBLIC_KEY_LEN:
        raise ValueError("public key must be 33 octets")
    return key.data


def _sig_bytes(sig: bytes) -> bytes:
    if len(sig) != SIGNATURE_LEN:
        raise ValueError("signature must be 64 octets")
    return sig


def encode_temp_cert(cert: TempCert) -> bytes:
    return (
        _key_bytes(cert.pseudo_public_key)
        + _F64.pack(cert.expiration)
        + _U64.pack(cert.pseudo_id)
        + _sig_bytes(cert.rsu_signature)
    )


def read_temp_cert(r: Reader) -> TempCert:
    return TempCert(r.public_key(), r.f64(), r.u64(), r.signature())


def decode_temp_cert(data: bytes, scheme: str = crypto.DEFAULT_SCHEME) -> TempCert:
    r = Reader(data, scheme)
    cert = read_temp_cert(r)
    r.finish()
    return cert


def encode_long_term_cert(cert: LongTermCert) -> bytes:
    return (
        _key_bytes(cert.vehicle_public_key)
        + _U64.pack(cert.serial)
        + _F64.pack(cert.issued_at)
        + _sig_bytes(cert.authority_signature)
    )


def read_long_term_cert(r: Reader) -> LongTermCert:
    return LongTermCert(r.public_key(), r.u64(), r.f64(), r.signature())


def decode_long_term_cert(data: bytes, scheme: str = crypto.DEFAULT_SCHEME) -> LongTermCert:
    r = Reader(data, scheme)
    cert = read_long_term_cert(r)
    r.finish()
    return cert


def encode_history_entry(entry: HistoryEntry) -> bytes:
    return (
        _U64.pack(entry.pseudo_id)
        + _key_bytes(entry.pseudo_public_key)
        + encode_long_term_cert(entry.long_term_cert)
        + _F64.pack(entry.issued_at)
    )


def decode_history_entry(data: bytes, scheme: str = crypto.DEFAULT_SCHEME) -> HistoryEntry:
    r = Reader(data, scheme)
    entry = HistoryEntry(r.u64(), r.public_key(), read_long_term_cert(r), r.f64())
    r.finish()
    return entry


def encode_revocation_list(rl: RevocationList) -> bytes:
    serials = sorted(rl.revoked_serials)
    return _U64.pack(rl.version) + _U64.pack(len(serials)) + b"".join(map(_U64.pack, serials))


def decode_revocation_list(data: bytes) -> RevocationList:
    r = Reader(data)
    version, n = r.u64(), r.u64()
    serials = [r.u64() for _ in range(n)]
    r.finish()
    if serials != sorted(set(serials)):
        raise DecodeError("revoked serials must be strictly increasing")
    return RevocationList(version, frozenset(serials))
