"""Roadside unit: temporary-certificate issuance, history table, RL sync."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from . import crypto
from .certs import (
    LONG_TERM_CERT_LEN,
    HistoryEntry,
    Reader,
    RevocationList,
    TempCert,
    read_long_term_cert,
    rl_merge,
    sign_temp_cert,
)
from .crypto import PrivateKey, PublicKey
from .errors import DecodeError, DecryptionError

DEFAULT_DELTA_MAX = 1.0
DEFAULT_CERT_LIFETIME = 600.0


@dataclass(frozen=True)
class CertRequest:
    pseudo_public_key: PublicKey
    ciphertext: bytes
    request_signature: bytes

    def signed_part(self) -> bytes:
        return signed_request_part(self.pseudo_public_key, self.ciphertext)

    def encode(self) -> bytes:
        return (
            self.pseudo_public_key.data
            + len(self.ciphertext).to_bytes(4, "big")
            + self.ciphertext
            + self.request_signature
        )

    @classmethod
    def decode(cls, data: bytes, scheme: str = crypto.DEFAULT_SCHEME) -> "CertRequest":
        r = Reader(data, scheme)
        pk = r.public_key()
        ct = r.take(int.from_bytes(r.take(4), "big"))
        req = cls(pk, ct, r.signature())
        r.finish()
        return req


def signed_request_part(pseudo_public_key: PublicKey, ciphertext: bytes) -> bytes:
    return pseudo_public_key.data + ciphertext


class RejectReason(enum.Enum):
    DECRYPTION = "decryption_failure"
    MALFORMED = "malformed_plaintext"
    BAD_AUTHORITY_SIGNATURE = "bad_authority_signature"
    BAD_REQUEST_SIGNATURE = "bad_request_signature"
    KEY_MISMATCH = "key_mismatch"
    REVOKED = "revoked"


@dataclass(frozen=True)
class Reject:
    reason: RejectReason


@dataclass(frozen=True)
class Scheduled:
    cert: TempCert
    release_at: float


@dataclass
class Rsu:
    zone_id: str
    epoch: int
    private_key: PrivateKey
    authority_public: PublicKey
    rl: RevocationList = field(default_factory=RevocationList)
    history: dict[int, HistoryEntry] = field(default_factory=dict)
    delta_max: float = DEFAULT_DELTA_MAX
    cert_lifetime: float = DEFAULT_CERT_LIFETIME
    id_rng: random.Random = field(default_factory=random.Random)

    def handle_cert_request(self, req: CertRequest, now: float) -> Reject | Scheduled:
        """Check a request and, if it passes, issue a pseudonymous certificate.

        Checks run decrypt, long-term cert, request signature, key binding,
        revocation; the first failure names the reject reason.
        """
        try:
            plain = crypto.decrypt(self.private_key, req.ciphertext)
        except DecryptionError:
            return Reject(RejectReason.DECRYPTION)
        try:
            r = Reader(plain, self.authority_public.scheme)
            lt_cert = read_long_term_cert(r)
            inner_key = r.public_key()
            r.finish()
        except DecodeError:
            return Reject(RejectReason.MALFORMED)
        if not lt_cert.verify(self.authority_public):
            return Reject(RejectReason.BAD_AUTHORITY_SIGNATURE)
        if not crypto.verify(lt_cert.vehicle_public_key, req.signed_part(), req.request_signature):
            return Reject(RejectReason.BAD_REQUEST_SIGNATURE)
        if inner_key != req.pseudo_public_key:
            return Reject(RejectReason.KEY_MISMATCH)
        if lt_cert.serial in self.rl.revoked_serials:
            return Reject(RejectReason.REVOKED)

        pseudo_id = self.id_rng.getrandbits(64)
        while pseudo_id in self.history:
            pseudo_id = self.id_rng.getrandbits(64)
        cert = sign_temp_cert(
            self.private_key, req.pseudo_public_key, now + self.cert_lifetime, pseudo_id
        )
        self.history[pseudo_id] = HistoryEntry(pseudo_id, req.pseudo_public_key, lt_cert, now)
        return Scheduled(cert, now + self.id_rng.random() * self.delta_max)

    def apply_rl_update(self, rl: RevocationList) -> None:
        self.rl = rl_merge(self.rl, rl)

    def export_history(self) -> list[HistoryEntry]:
        return sorted(self.history.values(), key=lambda h: (h.issued_at, h.pseudo_id))


def build_request_plaintext(long_term_cert_bytes: bytes, pseudo_public_key: PublicKey) -> bytes:
    assert len(long_term_cert_bytes) == LONG_TERM_CERT_LEN
    return long_term_cert_bytes + pseudo_public_key.data
