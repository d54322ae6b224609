"""On-board unit: pseudonym acquisition, beaconing and cooperative verification.

A receiver either checks a beacon itself or, when enough of the sender's
neighbors are better placed to check it, holds the beacon for ``delta_t`` and
delivers it unless a signed disapproval for it shows up first. Who checks is
decided locally from pseudonym-ID distances over the neighbor lists that
vehicles gossip every ``theta`` seconds.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import crypto
from .authority import rsu_identity
from .certs import CertStatus, LongTermCert, TempCert, check_temp_cert, encode_long_term_cert
from .crypto import KeyPair, PublicKey, PublicParams
from .errors import MustRenewError
from .messages import Beacon, DisapprovalMsg, Kinematics, NeighborListMsg
from .rsu import CertRequest, build_request_plaintext, signed_request_part

SEEN_HORIZON = 10.0


class ElectionStrategy(enum.Enum):
    PAPER_RULE = "paper"
    P_NEAREST = "pnearest"


def is_verifier(
    self_id: int,
    sender_id: int,
    mutual_ids: Iterable[int],
    p: int,
    strategy: ElectionStrategy = ElectionStrategy.P_NEAREST,
) -> bool:
    """Decide whether ``self_id`` must check the signatures of ``sender_id``.

    ``mutual_ids`` are the neighbors both parties know, excluding themselves.
    With fewer than ``p`` of them every receiver checks. Otherwise:

    * PAPER_RULE: check iff |self - sender| <= the p-th *largest* distance
      from the sender to a mutual neighbor.
    * P_NEAREST: check iff |self - sender| is among the p smallest distances
      of {self} U mutual (ties resolve in favour of checking).
    """
    beta = abs(self_id - sender_id)
    alphas = [abs(sender_id - m) for m in mutual_ids]
    if len(alphas) < p:
        return True
    if strategy is ElectionStrategy.PAPER_RULE:
        return beta <= heapq.nlargest(p, alphas)[-1]
    return sum(1 for a in alphas if a < beta) < p


@dataclass(frozen=True)
class ObuParams:
    p: int = 5
    delta_t: float = 0.030
    theta: float = 1.0
    beacon_period: float = 0.300
    neighbor_timeout: float = 1.0
    election_strategy: ElectionStrategy = ElectionStrategy.P_NEAREST

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        for name in ("delta_t", "theta", "beacon_period", "neighbor_timeout"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class NeighborRecord:
    temp_cert: TempCert
    last_heard: float
    advertised_neighbors: frozenset[int] | None = None
    list_time: float | None = None


class Outcome(enum.Enum):
    DELIVERED = "delivered"
    DROPPED = "dropped_disapproved"
    RECHECKED = "rechecked"


@dataclass
class PendingMessage:
    beacon: Beacon
    received_at: float
    deadline: float
    outcome: Outcome | None = None


# receive actions
@dataclass(frozen=True)
class VerifyNow:
    pass


@dataclass(frozen=True)
class Wait:
    deadline: float


@dataclass(frozen=True)
class Ignore:
    pass


VERIFY_NOW = VerifyNow()
IGNORE = Ignore()


@dataclass(frozen=True)
class Deliver:
    beacon: Beacon


@dataclass(frozen=True)
class Disapprove:
    beacon: Beacon
    message: DisapprovalMsg | None


@dataclass(frozen=True)
class DisapprovalActions:
    forward: bool = False
    recheck: Beacon | None = None


@dataclass
class TimerOutput:
    delivered: list[Beacon] = field(default_factory=list)
    beacon_due: bool = False
    neighbor_list: NeighborListMsg | None = None
    evicted: list[int] = field(default_factory=list)


class Obu:
    """Protocol state of one vehicle.

    ``issuer_keys`` are the RSU public keys this vehicle accepts temporary
    certificates from (its own zone and the surrounding ones).
    ``on_deliver`` is the application-layer hook, called with
    ``(beacon, now)`` exactly once per accepted beacon.
    """

    def __init__(
        self,
        long_term: KeyPair,
        long_term_cert: LongTermCert,
        public_params: PublicParams,
        params: ObuParams = ObuParams(),
        issuer_keys: Sequence[PublicKey] = (),
        on_deliver: Callable[[Beacon, float], None] | None = None,
    ):
        self.long_term = long_term
        self.long_term_cert = long_term_cert
        self.public_params = public_params
        self.params = params
        self.issuer_keys = list(issuer_keys)
        self.on_deliver = on_deliver
        self.pseudo: tuple[KeyPair, TempCert] | None = None
        self.neighbor_table: dict[int, NeighborRecord] = {}
        self.pending: dict[bytes, PendingMessage] = {}
        self.seen_disapprovals: set[bytes] = set()
        self.seen_messages: dict[bytes, float] = {}
        self.next_beacon_at = 0.0
        self.next_list_at = 0.0
        self._requested: dict[bytes, KeyPair] = {}
        self._issuer_of: dict[TempCert, PublicKey] = {}  # which issuer key signed a cert

    # -- certificates ------------------------------------------------------

    @property
    def pseudo_id(self) -> int | None:
        return self.pseudo[1].pseudo_id if self.pseudo else None

    def build_cert_request(self, zone_id: str, epoch: int, entropy: crypto.Seed = None) -> CertRequest:
        """Fresh pseudonym keypair plus a request the zone's RSU can check.

        The new keypair stays on hold until `install_temp_cert` receives the
        matching certificate.
        """
        scheme = self.long_term.public.scheme
        seed = crypto._seed_bytes(entropy)
        pseudo_keys = crypto.keygen(b"pseudo" + seed, scheme)
        rsu_public = crypto.derive_identity_public(self.public_params, rsu_identity(zone_id, epoch))
        plaintext = build_request_plaintext(
            encode_long_term_cert(self.long_term_cert), pseudo_keys.public
        )
        sigma = crypto.encrypt(rsu_public, plaintext, b"sigma" + seed)
        sig = crypto.sign(self.long_term.private, signed_request_part(pseudo_keys.public, sigma))
        self._requested[pseudo_keys.public.data] = pseudo_keys
        return CertRequest(pseudo_keys.public, sigma, sig)

    def install_temp_cert(self, cert: TempCert) -> None:
        keys = self._requested.pop(cert.pseudo_public_key.data, None)
        if keys is None:
            raise ValueError("certificate does not match any outstanding request")
        self.pseudo = (keys, cert)

    def cert_status(self, cert: TempCert, now: float) -> CertStatus:
        issuer = self._issuer_of.get(cert)
        if issuer is not None:
            return check_temp_cert(cert, issuer, now)
        status = CertStatus.BAD_SIGNATURE
        for key in self.issuer_keys:
            status = check_temp_cert(cert, key, now)
            if status is not CertStatus.BAD_SIGNATURE:
                self._issuer_of[cert] = key
                break
        return status

    def _require_pseudo(self, now: float) -> tuple[KeyPair, TempCert]:
        if self.pseudo is None or now >= self.pseudo[1].expiration:
            raise MustRenewError("no temporary certificate valid at %.3f" % now)
        return self.pseudo

    # -- sending -----------------------------------------------------------

    def make_beacon(self, kinematics: Kinematics, now: float) -> Beacon:
        keys, cert = self._require_pseudo(now)
        return Beacon.create(keys.private, cert, kinematics, now)

    def make_neighbor_list(self, now: float) -> NeighborListMsg:
        keys, cert = self._require_pseudo(now)
        ids = [i for i in self.neighbor_table if i != cert.pseudo_id]
        return NeighborListMsg.create(keys.private, cert, ids, now)

    # -- receiving ---------------------------------------------------------

    def on_receive_beacon(self, beacon: Beacon, now: float) -> VerifyNow | Wait | Ignore:
        mid = beacon.message_id
        if mid in self.seen_messages or beacon.pseudo_id == self.pseudo_id:
            return IGNORE
        self.seen_messages[mid] = now
        if mid in self.seen_disapprovals:
            return VERIFY_NOW
        record = self.neighbor_table.get(beacon.pseudo_id)
        if record is None or record.advertised_neighbors is None or self.pseudo_id is None:
            return VERIFY_NOW
        me = self.pseudo_id
        mutual = (record.advertised_neighbors & self.neighbor_table.keys()) - {me, beacon.pseudo_id}
        if is_verifier(me, beacon.pseudo_id, mutual, self.params.p, self.params.election_strategy):
            return VERIFY_NOW
        deadline = now + self.params.delta_t
        self.pending[mid] = PendingMessage(beacon, now, deadline)
        return Wait(deadline)

    def beacon_valid(self, beacon: Beacon, now: float) -> bool:
        cert = beacon.temp_cert
        return (
            beacon.pseudo_id == cert.pseudo_id
            and self.cert_status(cert, now) is CertStatus.VALID
            and beacon.signature_valid(cert)
        )

    def verify_now(self, beacon: Beacon, now: float, announce: bool = True) -> Deliver | Disapprove:
        """Check a beacon locally; deliver it or produce a signed disapproval.

        With ``announce=False`` (rechecks triggered by someone else's
        disapproval) no new disapproval message is built.
        """
        if self.beacon_valid(beacon, now):
            self._deliver(beacon, now, refresh_cert=True)
            return Deliver(beacon)
        mid = beacon.message_id
        self.pending.pop(mid, None)
        message = None
        if announce and mid not in self.seen_disapprovals and self._has_valid_pseudo(now):
            keys, cert = self.pseudo
            message = DisapprovalMsg.create(keys.private, cert, mid, now)
        self.seen_disapprovals.add(mid)
        return Disapprove(beacon, message)

    def _has_valid_pseudo(self, now: float) -> bool:
        return self.pseudo is not None and now < self.pseudo[1].expiration

    def _deliver(self, beacon: Beacon, now: float, refresh_cert: bool) -> None:
        record = self.neighbor_table.get(beacon.pseudo_id)
        if record is None:
            self.neighbor_table[beacon.pseudo_id] = NeighborRecord(beacon.temp_cert, now)
        else:
            record.last_heard = now
            if refresh_cert:
                record.temp_cert = beacon.temp_cert
        if self.on_deliver is not None:
            self.on_deliver(beacon, now)

    def on_receive_neighbor_list(self, msg: NeighborListMsg, now: float) -> bool:
        """Store a sender's advertised neighbors; False if the list does not verify."""
        if msg.pseudo_id == self.pseudo_id:
            return False
        cert = msg.temp_cert
        if not (
            msg.pseudo_id == cert.pseudo_id
            and self.cert_status(cert, now) is CertStatus.VALID
            and msg.signature_valid(cert)
        ):
            return False
        record = self.neighbor_table.get(msg.pseudo_id)
        ids = frozenset(msg.neighbor_ids)
        if record is None:
            self.neighbor_table[msg.pseudo_id] = NeighborRecord(cert, now, ids, now)
        else:
            record.temp_cert = cert
            record.last_heard = now
            record.advertised_neighbors = ids
            record.list_time = now
        return True

    def on_receive_disapproval(self, d: DisapprovalMsg, now: float) -> DisapprovalActions:
        cert = d.reporter_temp_cert
        if not (
            d.reporter_pseudo_id == cert.pseudo_id
            and self.cert_status(cert, now) is CertStatus.VALID
            and d.signature_valid(cert)
        ):
            return DisapprovalActions()
        subject = d.subject_message_id
        if subject in self.seen_disapprovals:
            return DisapprovalActions()
        self.seen_disapprovals.add(subject)
        pending = self.pending.pop(subject, None)
        if pending is None:
            return DisapprovalActions(forward=True)
        pending.outcome = Outcome.RECHECKED
        return DisapprovalActions(forward=True, recheck=pending.beacon)

    # -- timers ------------------------------------------------------------

    def on_timer(self, now: float) -> TimerOutput:
        out = TimerOutput()
        for mid, pm in list(self.pending.items()):
            if pm.deadline <= now:
                del self.pending[mid]
                pm.outcome = Outcome.DELIVERED
                self._deliver(pm.beacon, now, refresh_cert=False)
                out.delivered.append(pm.beacon)
        timeout = self.params.neighbor_timeout
        for nid in [n for n, r in self.neighbor_table.items() if now - r.last_heard > timeout]:
            del self.neighbor_table[nid]
            out.evicted.append(nid)
        if now >= self.next_beacon_at:
            out.beacon_due = True
            self.next_beacon_at = _advance(self.next_beacon_at, self.params.beacon_period, now)
        if now >= self.next_list_at:
            self.next_list_at = _advance(self.next_list_at, self.params.theta, now)
            if self._has_valid_pseudo(now):
                out.neighbor_list = self.make_neighbor_list(now)
        horizon = now - SEEN_HORIZON
        if self.seen_messages and next(iter(self.seen_messages.values())) < horizon:
            self.seen_messages = {m: t for m, t in self.seen_messages.items() if t >= horizon}
        return out

    def next_wakeup(self) -> float:
        times = [self.next_beacon_at, self.next_list_at]
        times.extend(pm.deadline for pm in self.pending.values())
        return min(times)


def _advance(t: float, period: float, now: float) -> float:
    t += period
    while t <= now:
        t += period
    return t
