"""V2V wire messages: beacons, neighbor lists and disapprovals.

Every frame starts with a one-octet type tag. Integers are big-endian,
timestamps are IEEE doubles, kinematics are signed 64-bit milli-units and
certificates are embedded in their canonical encoding. The signature always
covers every preceding octet of the frame, tag included.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

from . import crypto
from .certs import TEMP_CERT_LEN, Reader, TempCert, encode_temp_cert, read_temp_cert
from .crypto import DIGEST_LEN, SIGNATURE_LEN, PrivateKey
from .errors import DecodeError

TAG_BEACON = 1
TAG_NEIGHBOR_LIST = 2
TAG_DISAPPROVAL = 3

KINEMATICS_LEN = 5 * 8
BEACON_LEN = 1 + 8 + 8 + KINEMATICS_LEN + TEMP_CERT_LEN + SIGNATURE_LEN
DISAPPROVAL_LEN = 1 + 8 + DIGEST_LEN + 8 + TEMP_CERT_LEN + SIGNATURE_LEN
MAX_LIST_IDS = 0xFFFF


def neighbor_list_len(n_ids: int) -> int:
    return 1 + 8 + 8 + 2 + 8 * n_ids + TEMP_CERT_LEN + SIGNATURE_LEN


def _u64(x: int) -> bytes:
    return x.to_bytes(8, "big")


def _f64(x: float) -> bytes:
    return struct.pack(">d", x)


def _milli(x: float) -> int:
    return round(x * 1000)


@dataclass(frozen=True)
class Kinematics:
    """Position (m), speed (m/s), heading (rad) and acceleration (m/s^2)."""

    x: float
    y: float
    speed: float = 0.0
    heading: float = 0.0
    accel: float = 0.0

    def quantized(self) -> "Kinematics":
        return Kinematics(*(_milli(v) / 1000 for v in self.as_tuple()))

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.x, self.y, self.speed, self.heading, self.accel)

    def encode(self) -> bytes:
        return b"".join(_milli(v).to_bytes(8, "big", signed=True) for v in self.as_tuple())

    @classmethod
    def read(cls, r: Reader) -> "Kinematics":
        return cls(*(r.i64() / 1000 for _ in range(5)))


class _Signed:
    """Shared helpers for frames whose signature covers ``body()``."""

    signature: bytes

    def body(self) -> bytes:  # pragma: no cover - overridden
        raise NotImplementedError

    def encode(self) -> bytes:
        return self._encoded

    @cached_property
    def _encoded(self) -> bytes:
        return self.body() + self.signature

    @cached_property
    def message_id(self) -> bytes:
        """Digest of the full frame; names the message in disapprovals."""
        return crypto.digest(self._encoded)

    @property
    def wire_size(self) -> int:
        return len(self._encoded)

    def signature_valid(self, cert: TempCert) -> bool:
        return crypto.verify(cert.pseudo_public_key, self.body(), self.signature)


@dataclass(frozen=True, eq=True)
class Beacon(_Signed):
    pseudo_id: int
    timestamp: float
    kinematics: Kinematics
    temp_cert: TempCert
    signature: bytes

    def body(self) -> bytes:
        return self._body

    @cached_property
    def _body(self) -> bytes:
        return (
            bytes([TAG_BEACON])
            + _u64(self.pseudo_id)
            + _f64(self.timestamp)
            + self.kinematics.encode()
            + encode_temp_cert(self.temp_cert)
        )

    @classmethod
    def create(
        cls, key: PrivateKey, cert: TempCert, kinematics: Kinematics, timestamp: float
    ) -> "Beacon":
        unsigned = cls(cert.pseudo_id, timestamp, kinematics.quantized(), cert, b"")
        return cls(
            cert.pseudo_id, timestamp, unsigned.kinematics, cert, crypto.sign(key, unsigned.body())
        )


@dataclass(frozen=True, eq=True)
class NeighborListMsg(_Signed):
    pseudo_id: int
    timestamp: float
    neighbor_ids: tuple[int, ...]
    temp_cert: TempCert
    signature: bytes

    def __post_init__(self):
        ids = self.neighbor_ids
        if any(a >= b for a, b in zip(ids, ids[1:])):
            raise ValueError("neighbor_ids must be strictly ascending")
        if len(ids) > MAX_LIST_IDS:
            raise ValueError("too many neighbor ids for one list")

    def body(self) -> bytes:
        return (
            bytes([TAG_NEIGHBOR_LIST])
            + _u64(self.pseudo_id)
            + _f64(self.timestamp)
            + len(self.neighbor_ids).to_bytes(2, "big")
            + b"".join(map(_u64, self.neighbor_ids))
            + encode_temp_cert(self.temp_cert)
        )

    @classmethod
    def create(cls, key: PrivateKey, cert: TempCert, neighbor_ids, timestamp: float):
        ids = tuple(sorted(set(neighbor_ids)))
        unsigned = cls(cert.pseudo_id, timestamp, ids, cert, b"")
        return cls(cert.pseudo_id, timestamp, ids, cert, crypto.sign(key, unsigned.body()))


@dataclass(frozen=True, eq=True)
class DisapprovalMsg(_Signed):
    reporter_pseudo_id: int
    subject_message_id: bytes
    timestamp: float
    reporter_temp_cert: TempCert
    signature: bytes

    def body(self) -> bytes:
        return (
            bytes([TAG_DISAPPROVAL])
            + _u64(self.reporter_pseudo_id)
            + self.subject_message_id
            + _f64(self.timestamp)
            + encode_temp_cert(self.reporter_temp_cert)
        )

    @classmethod
    def create(cls, key: PrivateKey, cert: TempCert, subject: bytes, timestamp: float):
        unsigned = cls(cert.pseudo_id, subject, timestamp, cert, b"")
        return cls(cert.pseudo_id, subject, timestamp, cert, crypto.sign(key, unsigned.body()))


Message = Beacon | NeighborListMsg | DisapprovalMsg


def decode_message(data: bytes, scheme: str = crypto.DEFAULT_SCHEME) -> Message:
    r = Reader(data, scheme)
    tag = r.u8()
    if tag == TAG_BEACON:
        msg = Beacon(r.u64(), r.f64(), Kinematics.read(r), read_temp_cert(r), r.signature())
    elif tag == TAG_NEIGHBOR_LIST:
        pid, ts, n = r.u64(), r.f64(), r.u16()
        ids = tuple(r.u64() for _ in range(n))
        try:
            msg = NeighborListMsg(pid, ts, ids, read_temp_cert(r), r.signature())
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
    elif tag == TAG_DISAPPROVAL:
        msg = DisapprovalMsg(r.u64(), r.take(DIGEST_LEN), r.f64(), read_temp_cert(r), r.signature())
    else:
        raise DecodeError(f"unknown message tag {tag}")
    r.finish()
    return msg
