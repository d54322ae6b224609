import itertools
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopauth.errors import MustRenewError
from coopauth.messages import (
    BEACON_LEN,
    DISAPPROVAL_LEN,
    Beacon,
    DisapprovalMsg,
    Kinematics,
    NeighborListMsg,
    decode_message,
    neighbor_list_len,
)
from coopauth.obu import (
    Deliver,
    Disapprove,
    ElectionStrategy,
    ObuParams,
    Outcome,
    VerifyNow,
    Wait,
    Ignore,
    is_verifier,
)
from conftest import ZONE, World

PAPER = ElectionStrategy.PAPER_RULE
NEAREST = ElectionStrategy.P_NEAREST
KIN = Kinematics(10.0, 20.0, 15.0, 1.5, -0.2)


# -- election rule ------------------------------------------------------------


def oracle(self_id, sender_id, mutual, p, strategy):
    """Direct transcription of both rules, no shared code with the library."""
    beta = abs(self_id - sender_id)
    alphas = sorted((abs(sender_id - m) for m in mutual), reverse=True)
    if strategy is PAPER:
        if len(alphas) < p:
            return True
        return beta <= alphas[p - 1]
    pool = sorted([beta] + alphas)
    return beta <= pool[min(p, len(pool)) - 1]


def test_literal_rule_worked_examples():
    sender = 100
    mutual = {sender + 50, sender - 40, sender + 9, sender - 8, sender + 2}
    assert not is_verifier(103, sender, mutual, 5, PAPER)
    assert is_verifier(98, sender, mutual - {98}, 5, PAPER)
    assert oracle(103, sender, mutual, 5, PAPER) is False
    assert oracle(98, sender, mutual, 5, PAPER) is True


@pytest.mark.parametrize("strategy", [PAPER, NEAREST])
@pytest.mark.parametrize("p", [1, 3, 5])
def test_empty_mutual_set_verifies(strategy, p):
    assert is_verifier(1, 2, set(), p, strategy)


def test_fallback_below_p():
    mutual = {10, 20, 30, 40}  # 4 < p
    assert is_verifier(1000, 0, mutual, 5, PAPER)
    assert is_verifier(1000, 0, mutual, 5, NEAREST)


ids = st.integers(0, 2**64 - 1)


@settings(max_examples=500)
@given(
    st.lists(ids, min_size=2, max_size=20, unique=True),
    st.integers(1, 6),
    st.sampled_from([PAPER, NEAREST]),
)
def test_is_verifier_matches_oracle(id_list, p, strategy):
    sender, me, *mutual = id_list
    assert is_verifier(me, sender, set(mutual), p, strategy) == oracle(me, sender, mutual, p, strategy)


@given(st.lists(ids, min_size=3, max_size=16, unique=True), st.integers(1, 6))
def test_pnearest_elects_exactly_p_with_shared_lists(id_list, p):
    sender, *receivers = id_list
    elected = [
        r for r in receivers if is_verifier(r, sender, set(receivers) - {r}, p, NEAREST)
    ]
    assert len(elected) == min(p, len(receivers))
    # the elected set is the p closest ids to the sender
    closest = sorted(receivers, key=lambda r: abs(r - sender))[:p]
    assert set(elected) == set(closest)


# -- wire formats ---------------------------------------------------------------


def test_fixed_wire_sizes(world):
    obu = world.add_vehicle("a")
    beacon = obu.make_beacon(KIN, 1.0)
    assert len(beacon.encode()) == BEACON_LEN == beacon.wire_size
    lst = NeighborListMsg.create(obu.pseudo[0].private, obu.pseudo[1], [5, 3, 9], 1.0)
    assert lst.neighbor_ids == (3, 5, 9)
    assert len(lst.encode()) == neighbor_list_len(3)
    d = DisapprovalMsg.create(obu.pseudo[0].private, obu.pseudo[1], beacon.message_id, 1.0)
    assert len(d.encode()) == DISAPPROVAL_LEN
    for msg in (beacon, lst, d):
        assert decode_message(msg.encode()) == msg
        assert msg.signature_valid(obu.pseudo[1])


def test_neighbor_list_must_be_ascending(world):
    obu = world.add_vehicle("a")
    with pytest.raises(ValueError):
        NeighborListMsg(1, 0.0, (5, 3), obu.pseudo[1], b"\x00" * 64)


def test_message_id_is_stable(world):
    obu = world.add_vehicle("a")
    b = obu.make_beacon(KIN, 1.0)
    assert b.message_id == decode_message(b.encode()).message_id
    assert b.message_id != obu.make_beacon(KIN, 1.3).message_id


@given(
    st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(0, 100),
    st.floats(-7, 7), st.floats(-20, 20),
)
def test_kinematics_quantize_within_half_milli(x, y, v, h, a):
    q = Kinematics(x, y, v, h, a).quantized()
    for raw, got in zip((x, y, v, h, a), q.as_tuple()):
        assert abs(raw - got) <= 0.0005 + 1e-9
    assert q.quantized() == q


# -- certificate handling ------------------------------------------------------


def test_consecutive_requests_use_fresh_keys(world):
    obu = world.enroll("a")
    r1, r2 = obu.build_cert_request(ZONE, 1), obu.build_cert_request(ZONE, 1)
    assert r1.pseudo_public_key != r2.pseudo_public_key


def test_unrequested_cert_refused(world):
    obu = world.enroll("a")
    other = world.add_vehicle("b")
    with pytest.raises(ValueError):
        obu.install_temp_cert(other.pseudo[1])


def test_pseudo_keypair_matches_cert(world):
    obu = world.add_vehicle("a")
    keys, cert = obu.pseudo
    assert keys.public == cert.pseudo_public_key


def test_make_beacon_requires_valid_cert(world):
    obu = world.enroll("a")
    with pytest.raises(MustRenewError):
        obu.make_beacon(KIN, 0.0)
    obu = world.add_vehicle("b", now=0.0)
    obu.make_beacon(KIN, 599.0)
    with pytest.raises(MustRenewError):
        obu.make_beacon(KIN, 600.0)


# -- receive / verify ------------------------------------------------------------


def _pair(world, params=ObuParams()):
    return world.add_vehicle("rx", params), world.add_vehicle("tx", params)


def test_stranger_beacon_verified_immediately(world):
    rx, tx = _pair(world)
    b = tx.make_beacon(KIN, 1.0)
    assert isinstance(rx.on_receive_beacon(b, 1.0), VerifyNow)
    assert isinstance(rx.on_receive_beacon(b, 1.0), Ignore)
    assert rx.verify_now(b, 1.0) == Deliver(b)
    assert tx.pseudo_id in rx.neighbor_table


def test_own_beacon_ignored(world):
    rx, _ = _pair(world)
    assert isinstance(rx.on_receive_beacon(rx.make_beacon(KIN, 1.0), 1.0), Ignore)


def _dense_group(world, n=8, p=2):
    """n vehicles that all know each other and each other's lists."""
    params = ObuParams(p=p)
    obus = [world.add_vehicle(f"v{i}", params) for i in range(n)]
    for a, b in itertools.permutations(obus, 2):
        beacon = a.make_beacon(KIN, 0.0)
        b.on_receive_beacon(beacon, 0.0)
        b.verify_now(beacon, 0.0)
    for a, b in itertools.permutations(obus, 2):
        assert b.on_receive_neighbor_list(a.make_neighbor_list(0.0), 0.0)
    return obus


def test_non_verifier_waits_delta_t(world):
    obus = _dense_group(world)
    sender, *rest = obus
    b = sender.make_beacon(KIN, 1.0)
    actions = {o.pseudo_id: o.on_receive_beacon(b, 1.0) for o in rest}
    waits = [a for a in actions.values() if isinstance(a, Wait)]
    assert len(rest) - len(waits) == 2
    assert all(w.deadline == pytest.approx(1.030) for w in waits)


def test_pending_delivered_once_after_delta_t(world):
    got = []
    obus = _dense_group(world)
    sender = obus[0]
    b = sender.make_beacon(KIN, 1.0)
    waiter = next(o for o in obus[1:] if isinstance(o.on_receive_beacon(b, 1.0), Wait))
    waiter.on_deliver = lambda beacon, t: got.append((beacon, t))
    assert waiter.on_timer(1.029).delivered == []
    assert waiter.on_timer(1.030).delivered == [b]
    assert waiter.on_timer(1.100).delivered == []
    assert got == [(b, 1.030)]


@pytest.mark.parametrize("kind", ["tampered", "expired", "wrong_key"])
def test_bad_beacons_disapproved(world, kind):
    rx, tx = _pair(world)
    b = tx.make_beacon(KIN, 1.0)
    now = 1.0
    if kind == "tampered":
        b = replace(b, kinematics=Kinematics(0, 0, 0, 0, 0))
    elif kind == "expired":
        now = tx.pseudo[1].expiration
    else:
        b = replace(b, signature=rx.make_beacon(KIN, 1.0).signature)
    result = rx.verify_now(b, now)
    assert isinstance(result, Disapprove)
    if kind != "expired":
        assert result.message is not None
        assert result.message.subject_message_id == b.message_id
        assert result.message.signature_valid(rx.pseudo[1])


def test_disapproval_for_pending_triggers_recheck(world):
    obus = _dense_group(world)
    sender = obus[0]
    forged = replace(sender.make_beacon(KIN, 1.0), kinematics=Kinematics(9, 9, 9, 0, 0))
    outcomes = {o: o.on_receive_beacon(forged, 1.0) for o in obus[1:]}
    verifier = next(o for o, a in outcomes.items() if isinstance(a, VerifyNow))
    waiter = next(o for o, a in outcomes.items() if isinstance(a, Wait))
    pending = waiter.pending[forged.message_id]
    d = verifier.verify_now(forged, 1.007).message
    actions = waiter.on_receive_disapproval(d, 1.008)
    assert actions.forward and actions.recheck == forged
    assert pending.outcome is Outcome.RECHECKED
    recheck = waiter.verify_now(forged, 1.015, announce=False)
    assert isinstance(recheck, Disapprove) and recheck.message is None
    assert waiter.on_timer(2.0).delivered == []
    assert not waiter.on_receive_disapproval(d, 1.009).forward


def test_disapproval_with_bad_signature_ignored(world):
    rx, tx = _pair(world)
    b = tx.make_beacon(KIN, 1.0)
    d = DisapprovalMsg.create(tx.pseudo[0].private, tx.pseudo[1], b.message_id, 1.0)
    bad = replace(d, signature=bytes(64))
    actions = rx.on_receive_disapproval(bad, 1.0)
    assert not actions.forward and actions.recheck is None
    assert b.message_id not in rx.seen_disapprovals


def test_after_disapproval_beacon_is_always_checked(world):
    obus = _dense_group(world)
    sender = obus[0]
    b = sender.make_beacon(KIN, 1.0)
    # a disapproval seen before the beacon forces a local check
    rx = obus[1]
    d = DisapprovalMsg.create(obus[2].pseudo[0].private, obus[2].pseudo[1], b.message_id, 0.99)
    rx.on_receive_disapproval(d, 0.99)
    assert isinstance(rx.on_receive_beacon(b, 1.0), VerifyNow)


def test_timer_lists_and_eviction(world):
    params = ObuParams(theta=1.0, neighbor_timeout=1.0)
    rx, tx = _pair(world, params)
    b = tx.make_beacon(KIN, 0.0)
    rx.on_receive_beacon(b, 0.0)
    rx.verify_now(b, 0.0)
    out = rx.on_timer(0.0)
    assert out.beacon_due
    assert out.neighbor_list is not None
    assert out.neighbor_list.neighbor_ids == (tx.pseudo_id,)
    assert rx.on_timer(0.5).neighbor_list is None
    assert rx.on_timer(1.0).neighbor_list is not None
    assert rx.on_timer(1.0).evicted == []
    assert rx.on_timer(1.01).evicted == [tx.pseudo_id]
    assert tx.pseudo_id not in rx.neighbor_table


def test_beacon_period(world):
    rx, _ = _pair(world)
    due = [t / 100 for t in range(0, 200) if rx.on_timer(t / 100).beacon_due]
    assert due == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.8])


def test_unverified_beacon_does_not_touch_neighbor_table(world):
    rx, tx = _pair(world)
    b = replace(tx.make_beacon(KIN, 1.0), kinematics=Kinematics(0, 0, 0, 0, 0))
    rx.on_receive_beacon(b, 1.0)
    rx.verify_now(b, 1.0)
    assert tx.pseudo_id not in rx.neighbor_table


def test_obu_params_validation():
    with pytest.raises(ValueError):
        ObuParams(p=0)
    with pytest.raises(ValueError):
        ObuParams(delta_t=0)
    with pytest.raises(ValueError):
        ObuParams(theta=-1)
