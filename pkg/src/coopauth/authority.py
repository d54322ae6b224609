"""Trusted center: vehicle enrollment, RSU provisioning, tracing and revocation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from . import crypto
from .certs import HistoryEntry, LongTermCert, RevocationList, rl_add
from .crypto import KeyPair, MasterParams, PrivateKey, PublicParams
from .errors import DuplicateIdentityError, IntegrityError, NotFoundError, StaleEpochError


def rsu_identity(zone_id: str, epoch: int) -> str:
    """Identity string an RSU key is derived from: zone and provisioning epoch."""
    return f"{zone_id}#{epoch}"


@dataclass
class Authority:
    master: MasterParams
    keypair: KeyPair
    enrollment_db: dict[int, tuple[str, LongTermCert]] = field(default_factory=dict)
    current_rl: RevocationList = field(default_factory=RevocationList)
    rsu_registry: dict[str, int] = field(default_factory=dict)
    _serials: itertools.count = field(default_factory=lambda: itertools.count(1), repr=False)
    _by_identity: dict[str, int] = field(default_factory=dict, repr=False)

    @classmethod
    def create(cls, seed: crypto.Seed = None, scheme: str = crypto.DEFAULT_SCHEME) -> "Authority":
        seed_b = crypto._seed_bytes(seed)
        return cls(
            master=crypto.setup_master(b"master" + seed_b, scheme),
            keypair=crypto.keygen(b"authority" + seed_b, scheme),
        )

    @property
    def scheme(self) -> str:
        return self.keypair.public.scheme

    @property
    def public_key(self) -> crypto.PublicKey:
        return self.keypair.public

    @property
    def public_params(self) -> PublicParams:
        return self.master.public_params

    def enroll_vehicle(
        self, identity: str, now: float, seed: crypto.Seed = None
    ) -> tuple[KeyPair, LongTermCert]:
        """Issue a long-term keypair and certificate for a vehicle seen in person."""
        if not identity:
            raise ValueError("identity must be non-empty")
        if identity in self._by_identity:
            raise DuplicateIdentityError(f"{identity!r} is already enrolled")
        keys = crypto.keygen(seed, self.scheme)
        serial = next(self._serials)
        unsigned = LongTermCert(keys.public, serial, float(now), b"")
        cert = LongTermCert(
            keys.public, serial, float(now), crypto.sign(self.keypair.private, unsigned.tbs())
        )
        self.enrollment_db[serial] = (identity, cert)
        self._by_identity[identity] = serial
        return keys, cert

    def provision_rsu(self, zone_id: str, epoch: int) -> PrivateKey:
        registered = self.rsu_registry.get(zone_id)
        if registered is not None and epoch < registered:
            raise StaleEpochError(f"{zone_id}: epoch {epoch} < registered {registered}")
        self.rsu_registry[zone_id] = epoch
        return crypto.derive_identity_private(self.master, rsu_identity(zone_id, epoch))

    def trace(self, pseudo_id: int, history: Iterable[HistoryEntry]) -> str:
        """Map a pseudonym back to the enrolled identity using an RSU history table."""
        entry = next((h for h in history if h.pseudo_id == pseudo_id), None)
        if entry is None:
            raise NotFoundError(f"pseudo_id {pseudo_id} not in history")
        serial = entry.long_term_cert.serial
        if serial not in self.enrollment_db:
            raise IntegrityError(f"serial {serial} missing from enrollment database")
        return self.enrollment_db[serial][0]

    def serial_of(self, identity: str) -> int:
        try:
            return self._by_identity[identity]
        except KeyError:
            raise NotFoundError(f"{identity!r} is not enrolled") from None

    def revoke(self, identity: str) -> RevocationList:
        self.current_rl = rl_add(self.current_rl, self.serial_of(identity))
        return self.current_rl
