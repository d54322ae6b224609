"""Deterministic discrete-event simulation of beaconing vehicles.

Model:
* channel: unit disk of ``coverage_radius`` (closed), no MAC contention, no
  propagation delay, serialisation delay = frame bits / bandwidth;
* every vehicle has one FIFO processor; signing costs ``sign_cost``, any
  signature check ``verify_cost``; received jobs beyond
  ``rx_buffer_capacity`` waiting jobs are dropped;
* protocol decisions (election, dedup, timers) are free.

Events pop in (time, sequence) order, sequence being assigned at insertion, so
a run is a pure function of its config.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import math
import random
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from typing import IO, Sequence

from .. import crypto
from ..authority import Authority, rsu_identity
from ..baseline import BaselineObu
from ..messages import Beacon, DisapprovalMsg, Kinematics, NeighborListMsg
from ..obu import Deliver, Obu, VerifyNow, Wait
from ..rsu import Rsu, Scheduled
from ..errors import MustRenewError
from .config import Protocol, ScenarioConfig
from .metrics import MetricsReport
from .mobility import GridMobility


class Kind(enum.IntEnum):
    TX_START = 1
    RX_DELIVER = 2
    TIMER_FIRE = 3
    PROC_DONE = 4
    MOBILITY_STEP = 5
    RL_PUSH = 6
    CERT_RELEASE = 7


class Job(enum.IntEnum):
    SIGN_BEACON = 1
    SIGN_LIST = 2
    SIGN_DISAPPROVAL = 3
    VERIFY_BEACON = 4
    VERIFY_LIST = 5
    VERIFY_DISAPPROVAL = 6
    RECHECK = 7


_SIGN_JOBS = (Job.SIGN_BEACON, Job.SIGN_LIST, Job.SIGN_DISAPPROVAL)


def derive_seed(*parts) -> int:
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def transmission_delay(frame_bytes: int, bandwidth: float) -> float:
    return frame_bytes * 8 / bandwidth


class _Node:
    __slots__ = ("index", "identity", "obu", "forger", "queue", "busy", "zone", "periodic_at", "forge_key")

    def __init__(self, index: int, identity: str, obu: Obu):
        self.index = index
        self.identity = identity
        self.obu = obu
        self.forger = False
        self.queue: deque = deque()
        self.busy = False
        self.zone: tuple[int, int] = (0, 0)
        self.periodic_at = math.inf
        self.forge_key = None


class _BeaconInfo:
    __slots__ = ("gen_time", "sender", "counted", "forged", "verifiers")

    def __init__(self, gen_time: float, sender: int, counted: bool, forged: bool):
        self.gen_time = gen_time
        self.sender = sender
        self.counted = counted
        self.forged = forged
        self.verifiers = 0


class Simulation:
    def __init__(self, config: ScenarioConfig, trace: IO[str] | None = None, audit: bool = False):
        self.cfg = config
        self.trace = trace
        self.audit: dict | None = {} if audit else None
        self._trace_hash = hashlib.sha256()
        self._events: list = []
        self._seq = 0
        self.now = 0.0

        seed = config.seed
        scheme = config.crypto_scheme
        self.rng = random.Random(derive_seed(seed, "scenario"))
        self.authority = Authority.create(derive_seed(seed, "authority"), scheme)

        self.zones_per_side = max(1, math.ceil(config.area / config.zone_size))
        self.rsus: dict[tuple[int, int], Rsu] = {}
        for zx in range(self.zones_per_side):
            for zy in range(self.zones_per_side):
                zone_id = self.zone_id((zx, zy))
                self.rsus[zx, zy] = Rsu(
                    zone_id,
                    0,
                    self.authority.provision_rsu(zone_id, 0),
                    self.authority.public_key,
                    delta_max=config.delta_max,
                    cert_lifetime=config.cert_lifetime,
                    id_rng=random.Random(derive_seed(seed, "rsu", zone_id)),
                )
        issuer_keys = [
            crypto.derive_identity_public(self.authority.public_params, rsu_identity(r.zone_id, 0))
            for r in self.rsus.values()
        ]

        n = config.vehicle_count
        self.mobility = GridMobility(
            n, config.area, config.grid_spacing, config.speed_range,
            random.Random(derive_seed(seed, "mobility")),
        )
        obu_cls = BaselineObu if config.protocol is Protocol.BASELINE else Obu
        self.nodes: list[_Node] = []
        for i in range(n):
            identity = f"veh-{i}"
            keys, cert = self.authority.enroll_vehicle(identity, 0.0, seed=derive_seed(seed, "veh", i))
            obu = obu_cls(keys, cert, self.authority.public_params, config.obu_params, issuer_keys)
            node = _Node(i, identity, obu)
            obu.on_deliver = self._make_deliver_hook(i)
            obu.next_beacon_at = self.rng.random() * config.beacon_period
            if config.protocol is Protocol.COOPERATIVE:
                obu.next_list_at = self.rng.random() * config.obu_params.theta
            node.zone = self.zone_of(i)
            # bootstrap: certificates are obtained before the clock starts
            req = obu.build_cert_request(self.zone_id(node.zone), 0, derive_seed(seed, "req", i, 0))
            result = self.rsus[node.zone].handle_cert_request(req, 0.0)
            assert isinstance(result, Scheduled), result
            obu.install_temp_cert(result.cert)
            self.nodes.append(node)

        n_forgers = round(config.forger_fraction * n)
        for i in sorted(self.rng.sample(range(n), n_forgers)):
            self.nodes[i].forger = True
            self.nodes[i].forge_key = crypto.keygen(derive_seed(seed, "forge", i), scheme).private

        self.beacons: dict[bytes, _BeaconInfo] = {}
        self.delay_sum = 0.0
        self.expected = self.delivered = self.overflow = self.disapproved = 0
        self.forged_delivered = 0
        self.rx_beacons = 0
        self.rx_in_window = 0
        self.checks_counted = 0
        self.checks_in_window = 0
        self.control_checks = 0
        self.beacons_sent = 0
        self.renewals = self.renewals_rejected = 0
        self._renewal_counter = 0

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def zone_id(zone: tuple[int, int]) -> str:
        return f"zone-{zone[0]}-{zone[1]}"

    def zone_of(self, i: int) -> tuple[int, int]:
        x, y = self.mobility.position(i)
        last = self.zones_per_side - 1
        size = self.cfg.zone_size
        return min(int(x // size), last), min(int(y // size), last)

    def _push(self, t: float, kind: Kind, node: int, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._events, (t, self._seq, kind, node, payload))

    def _make_deliver_hook(self, i: int):
        def hook(beacon: Beacon, now: float) -> None:
            info = self.beacons.get(beacon.message_id)
            if info is None:
                return
            self._outcome(info, beacon, i, "delivered")
            if info.counted:
                self.delivered += 1
                self.delay_sum += now - info.gen_time
                if info.forged:
                    self.forged_delivered += 1

        return hook

    def _outcome(self, info: _BeaconInfo, beacon: Beacon, receiver: int, what: str) -> None:
        if self.audit is None:
            return
        key = (beacon.message_id, receiver)
        if key in self.audit:
            raise AssertionError(f"pair {key[0].hex()[:8]}->{receiver} has outcomes {self.audit[key]} and {what}")
        self.audit[key] = what

    def _enqueue(self, node: _Node, job: Job, payload, received: bool) -> bool:
        if received and len(node.queue) >= self.cfg.rx_buffer_capacity:
            return False
        node.queue.append((job, payload))
        if not node.busy:
            self._start_next(node)
        return True

    def _start_next(self, node: _Node) -> None:
        if not node.queue:
            return
        job, payload = node.queue.popleft()
        node.busy = True
        cost = self.cfg.sign_cost if job in _SIGN_JOBS else self.cfg.verify_cost
        self._push(self.now + cost, Kind.PROC_DONE, node.index, (job, payload))

    def _schedule_periodic(self, node: _Node) -> None:
        t = min(node.obu.next_beacon_at, node.obu.next_list_at)
        if t != node.periodic_at and t <= self.cfg.duration:
            node.periodic_at = t
            self._push(t, Kind.TIMER_FIRE, node.index)

    # -- event handlers ----------------------------------------------------

    def _on_timer(self, node: _Node) -> None:
        out = node.obu.on_timer(self.now)
        if out.beacon_due:
            self._enqueue(node, Job.SIGN_BEACON, self.now, received=False)
        if out.neighbor_list is not None:
            self._enqueue(node, Job.SIGN_LIST, out.neighbor_list, received=False)
        self._schedule_periodic(node)

    def _kinematics(self, i: int) -> Kinematics:
        x, y = self.mobility.position(i)
        return Kinematics(x, y, self.mobility.speed[i], self.mobility.heading(i), 0.0)

    def _proc_done(self, node: _Node, job: Job, payload) -> None:
        node.busy = False
        obu = node.obu
        if job is Job.SIGN_BEACON:
            gen_time = payload
            try:
                beacon = obu.make_beacon(self._kinematics(node.index), self.now)
            except MustRenewError:
                beacon = None
            if beacon is not None:
                if node.forger:
                    beacon = Beacon(
                        beacon.pseudo_id, beacon.timestamp, beacon.kinematics, beacon.temp_cert,
                        crypto.sign(node.forge_key, beacon.body()),
                    )
                counted = gen_time >= self.cfg.warmup
                self.beacons[beacon.message_id] = _BeaconInfo(gen_time, node.index, counted, node.forger)
                self._push(self.now, Kind.TX_START, node.index, beacon)
        elif job in (Job.SIGN_LIST, Job.SIGN_DISAPPROVAL):
            self._push(self.now, Kind.TX_START, node.index, payload)
        elif job in (Job.VERIFY_BEACON, Job.RECHECK):
            self._check_beacon(node, payload, recheck=job is Job.RECHECK)
        elif job is Job.VERIFY_LIST:
            self.control_checks += 1
            obu.on_receive_neighbor_list(payload, self.now)
        elif job is Job.VERIFY_DISAPPROVAL:
            self.control_checks += 1
            actions = obu.on_receive_disapproval(payload, self.now)
            if actions.forward:
                self._push(self.now, Kind.TX_START, node.index, payload)
            if actions.recheck is not None:
                self._enqueue(node, Job.RECHECK, actions.recheck, received=False)
        self._start_next(node)

    def _check_beacon(self, node: _Node, beacon: Beacon, recheck: bool) -> None:
        info = self.beacons.get(beacon.message_id)
        if self.now >= self.cfg.warmup:
            self.checks_in_window += 1
        if info is not None and info.counted:
            self.checks_counted += 1
        result = node.obu.verify_now(beacon, self.now, announce=not recheck)
        if isinstance(result, Deliver):
            return
        if info is not None:
            self._outcome(info, beacon, node.index, "disapproved")
            if info.counted:
                self.disapproved += 1
        if result.message is not None:
            self._enqueue(node, Job.SIGN_DISAPPROVAL, result.message, received=False)

    def _tx_start(self, sender: int, msg) -> None:
        receivers = self.mobility.neighbors(sender, self.cfg.coverage_radius)
        if isinstance(msg, Beacon):
            self.beacons_sent += 1
            info = self.beacons[msg.message_id]
            if info.counted:
                self.expected += len(receivers)
        if len(receivers):
            delay = transmission_delay(msg.wire_size, self.cfg.bandwidth)
            self._push(self.now + delay, Kind.RX_DELIVER, sender, (msg, receivers.tolist()))

    def _rx_deliver(self, msg, receivers: list[int]) -> None:
        if isinstance(msg, Beacon):
            for r in receivers:
                self._rx_beacon(self.nodes[r], msg)
        elif isinstance(msg, NeighborListMsg):
            if self.cfg.protocol is Protocol.COOPERATIVE:
                for r in receivers:
                    self._enqueue(self.nodes[r], Job.VERIFY_LIST, msg, received=True)
        elif isinstance(msg, DisapprovalMsg):
            if self.cfg.protocol is Protocol.COOPERATIVE:
                for r in receivers:
                    node = self.nodes[r]
                    if msg.subject_message_id not in node.obu.seen_disapprovals:
                        self._enqueue(node, Job.VERIFY_DISAPPROVAL, msg, received=True)

    def _rx_beacon(self, node: _Node, beacon: Beacon) -> None:
        info = self.beacons[beacon.message_id]
        if info.counted:
            self.rx_beacons += 1
        if self.now >= self.cfg.warmup:
            self.rx_in_window += 1
        action = node.obu.on_receive_beacon(beacon, self.now)
        if isinstance(action, VerifyNow):
            info.verifiers += 1
            if not self._enqueue(node, Job.VERIFY_BEACON, beacon, received=True):
                self._outcome(info, beacon, node.index, "overflow")
                if info.counted:
                    self.overflow += 1
        elif isinstance(action, Wait):
            self._push(action.deadline, Kind.TIMER_FIRE, node.index)

    def _mobility_step(self) -> None:
        self.mobility.step(self.cfg.mobility_dt)
        for node in self.nodes:
            zone = self.zone_of(node.index)
            if zone != node.zone:
                node.zone = zone
                self._renew(node)
        t = self.now + self.cfg.mobility_dt
        if t <= self.cfg.duration:
            self._push(t, Kind.MOBILITY_STEP, -1)

    def _renew(self, node: _Node) -> None:
        self._renewal_counter += 1
        rsu = self.rsus[node.zone]
        entropy = derive_seed(self.cfg.seed, "req", node.index, self._renewal_counter)
        req = node.obu.build_cert_request(rsu.zone_id, rsu.epoch, entropy)
        result = rsu.handle_cert_request(req, self.now)
        if isinstance(result, Scheduled):
            self.renewals += 1
            self._push(result.release_at, Kind.CERT_RELEASE, node.index, result.cert)
        else:
            self.renewals_rejected += 1

    def _rl_push(self) -> None:
        rl = self.authority.current_rl
        for node in self.nodes:
            if node.forger:
                rl = self.authority.revoke(node.identity)
        for rsu in self.rsus.values():
            rsu.apply_rl_update(rl)

    # -- main loop ---------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.cfg
        for node in self.nodes:
            self._schedule_periodic(node)
        self._push(cfg.mobility_dt, Kind.MOBILITY_STEP, -1)
        if cfg.revocation_time is not None:
            self._push(cfg.revocation_time, Kind.RL_PUSH, -1)

        events = self._events
        while events:
            t, seq, kind, idx, payload = heapq.heappop(events)
            if t > cfg.duration:
                break
            self.now = t
            line = f"{t!r} {seq} {kind.name} {idx}"
            self._trace_hash.update(line.encode() + b"\n")
            if self.trace is not None:
                self.trace.write(line + self._detail(kind, payload) + "\n")
            if kind is Kind.RX_DELIVER:
                self._rx_deliver(*payload)
            elif kind is Kind.PROC_DONE:
                self._proc_done(self.nodes[idx], *payload)
            elif kind is Kind.TIMER_FIRE:
                node = self.nodes[idx]
                if t == node.periodic_at:
                    node.periodic_at = math.inf
                self._on_timer(node)
            elif kind is Kind.TX_START:
                self._tx_start(idx, payload)
            elif kind is Kind.MOBILITY_STEP:
                self._mobility_step()
            elif kind is Kind.CERT_RELEASE:
                self.nodes[idx].obu.install_temp_cert(payload)
            elif kind is Kind.RL_PUSH:
                self._rl_push()
        return self._report()

    @staticmethod
    def _detail(kind: Kind, payload) -> str:
        if kind is Kind.PROC_DONE:
            return f" {payload[0].name}"
        if kind in (Kind.TX_START, Kind.RX_DELIVER):
            msg = payload[0] if kind is Kind.RX_DELIVER else payload
            extra = f" n={len(payload[1])}" if kind is Kind.RX_DELIVER else ""
            return f" {type(msg).__name__} {msg.message_id.hex()[:16]}{extra}"
        return ""

    def _report(self) -> MetricsReport:
        cfg = self.cfg
        windows = cfg.vehicle_count * (cfg.duration - cfg.warmup) / 0.300
        hist = Counter(
            info.verifiers for info in self.beacons.values() if info.counted and not info.forged
        )
        in_flight = self.expected - self.delivered - self.overflow - self.disapproved
        return MetricsReport(
            load=cfg.vehicle_count,
            mean_e2e_delay=self.delay_sum / self.delivered if self.delivered else 0.0,
            loss_ratio=self.overflow / self.expected if self.expected else 0.0,
            approval_ratio=self.checks_counted / self.rx_beacons if self.rx_beacons else 0.0,
            verified_per_300ms=self.checks_in_window / windows,
            verifier_count_histogram=dict(sorted(hist.items())),
            offered_per_300ms=self.rx_in_window / windows,
            beacons_sent=self.beacons_sent,
            expected_pairs=self.expected,
            delivered_pairs=self.delivered,
            overflow_pairs=self.overflow,
            disapproved_pairs=self.disapproved,
            in_flight_pairs=in_flight,
            forged_delivered=self.forged_delivered,
            control_checks=self.control_checks,
            renewals=self.renewals,
            renewals_rejected=self.renewals_rejected,
            trace_hash=self._trace_hash.hexdigest(),
        )


def run(config: ScenarioConfig, trace: IO[str] | None = None) -> MetricsReport:
    """Run one scenario; equal configs give identical reports."""
    return Simulation(config, trace).run()


def sweep(loads: Sequence[int], base: ScenarioConfig, workers: int = 1) -> list[tuple[int, MetricsReport]]:
    """One independent run per vehicle count, seeded from (base seed, load)."""
    if not loads:
        raise ValueError("loads must be non-empty")
    configs = [base.with_(vehicle_count=n, seed=derive_seed(base.seed, n)) for n in loads]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, configs))
    else:
        reports = [run(c) for c in configs]
    return list(zip(loads, reports))
