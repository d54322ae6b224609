import random
import statistics

import pytest

from coopauth import crypto
from coopauth.certs import CertStatus, check_temp_cert, encode_long_term_cert
from coopauth.obu import Obu
from coopauth.rsu import CertRequest, Reject, RejectReason, Rsu, Scheduled, build_request_plaintext
from conftest import ZONE, World


def test_success_path(world):
    obu = world.enroll("veh-1")
    result = world.rsu.handle_cert_request(obu.build_cert_request(ZONE, 1, b"e"), 50.0)
    assert isinstance(result, Scheduled)
    assert check_temp_cert(result.cert, world.rsu_public, 50.0) is CertStatus.VALID
    assert result.cert.expiration == 50.0 + world.rsu.cert_lifetime
    assert 0 <= result.release_at - 50.0 < world.rsu.delta_max
    obu.install_temp_cert(result.cert)
    assert obu.pseudo_id == result.cert.pseudo_id


def test_request_wire_round_trip(world):
    req = world.enroll("veh-1").build_cert_request(ZONE, 1, b"e")
    assert CertRequest.decode(req.encode()) == req


def test_revoked_vehicle_rejected(world):
    obu = world.enroll("veh-1")
    world.rsu.apply_rl_update(world.authority.revoke("veh-1"))
    result = world.rsu.handle_cert_request(obu.build_cert_request(ZONE, 1), 0.0)
    assert result == Reject(RejectReason.REVOKED)
    assert world.rsu.history == {}


def test_forged_long_term_cert_rejected(world):
    # a self-made authority signs the vehicle's cert
    rogue = World(seed=99).enroll("veh-x")
    obu = Obu(rogue.long_term, rogue.long_term_cert, world.authority.public_params)
    result = world.rsu.handle_cert_request(obu.build_cert_request(ZONE, 1), 0.0)
    assert result == Reject(RejectReason.BAD_AUTHORITY_SIGNATURE)


def test_stolen_cert_without_key_rejected(world):
    victim = world.enroll("veh-1")
    thief = world.enroll("veh-2")
    # thief wraps the victim's cert but can only sign with its own long-term key
    pseudo = crypto.keygen(b"thief")
    plain = build_request_plaintext(encode_long_term_cert(victim.long_term_cert), pseudo.public)
    sigma = crypto.encrypt(world.rsu_public, plain)
    sig = crypto.sign(thief.long_term.private, pseudo.public.data + sigma)
    result = world.rsu.handle_cert_request(CertRequest(pseudo.public, sigma, sig), 0.0)
    assert result == Reject(RejectReason.BAD_REQUEST_SIGNATURE)


def test_spliced_request_rejected(world):
    obu = world.enroll("veh-1")
    r1 = obu.build_cert_request(ZONE, 1, b"one")
    r2 = obu.build_cert_request(ZONE, 1, b"two")
    # cleartext key of r1, ciphertext of r2, re-signed by the same vehicle
    sig = crypto.sign(obu.long_term.private, r1.pseudo_public_key.data + r2.ciphertext)
    spliced = CertRequest(r1.pseudo_public_key, r2.ciphertext, sig)
    assert world.rsu.handle_cert_request(spliced, 0.0) == Reject(RejectReason.KEY_MISMATCH)


def test_wrong_zone_fails_decryption(world):
    obu = world.enroll("veh-1")
    req = obu.build_cert_request("zone-9-9", 1)
    assert world.rsu.handle_cert_request(req, 0.0) == Reject(RejectReason.DECRYPTION)
    stale = obu.build_cert_request(ZONE, 0)
    assert world.rsu.handle_cert_request(stale, 0.0) == Reject(RejectReason.DECRYPTION)


def test_malformed_plaintext_rejected(world):
    pseudo = crypto.keygen(b"p")
    sigma = crypto.encrypt(world.rsu_public, b"not a certificate")
    result = world.rsu.handle_cert_request(CertRequest(pseudo.public, sigma, b"\x00" * 64), 0.0)
    assert result == Reject(RejectReason.MALFORMED)


def test_reject_reasons_are_distinct():
    assert len({r.value for r in RejectReason}) == len(RejectReason)


def test_release_jitter_mean():
    w = World()
    req = w.enroll("veh-1").build_cert_request(ZONE, 1)
    delays = []
    for i in range(1000):
        res = w.rsu.handle_cert_request(req, float(i))
        delays.append(res.release_at - i)
    assert all(0 <= d < w.rsu.delta_max for d in delays)
    assert abs(statistics.fmean(delays) - 0.5) <= 0.05


class _CollidingRng(random.Random):
    """Returns each 64-bit draw twice in a row."""

    def __init__(self):
        super().__init__(0)
        self._last = None

    def getrandbits(self, k):
        if self._last is None:
            self._last = super().getrandbits(k)
            return self._last
        out, self._last = self._last, None
        return out


def test_pseudo_id_redrawn_on_collision():
    w = World()
    w.rsu.id_rng = _CollidingRng()
    req = w.enroll("veh-1").build_cert_request(ZONE, 1)
    ids = [w.rsu.handle_cert_request(req, 0.0).cert.pseudo_id for _ in range(50)]
    assert len(set(ids)) == 50


@pytest.mark.slow
def test_pseudo_ids_unique_over_long_lifetime():
    w = World()
    req = w.enroll("veh-1").build_cert_request(ZONE, 1)
    for i in range(100_000):
        w.rsu.handle_cert_request(req, float(i))
    assert len(w.rsu.history) == 100_000


def test_no_cert_for_revoked_serial_audit():
    w = World()
    rng = random.Random(11)
    obus = {f"v{i}": w.enroll(f"v{i}") for i in range(40)}
    for step in range(200):
        name = rng.choice(list(obus))
        if rng.random() < 0.1:
            w.rsu.apply_rl_update(w.authority.revoke(name))
        serial = obus[name].long_term_cert.serial
        revoked_now = serial in w.rsu.rl
        res = w.rsu.handle_cert_request(obus[name].build_cert_request(ZONE, 1, step), float(step))
        assert isinstance(res, Reject) == revoked_now


def test_rl_update_rules(world):
    a = world.authority
    for i in range(3):
        a.enroll_vehicle(f"x{i}", 0.0)
    rl_new = a.revoke("x0")
    rl_newer = a.revoke("x1")
    world.rsu.apply_rl_update(rl_newer)
    world.rsu.apply_rl_update(rl_new)  # older update keeps superset and version
    assert world.rsu.rl == rl_newer
    world.rsu.apply_rl_update(rl_newer)
    assert world.rsu.rl == rl_newer


def test_history_export(world):
    assert world.rsu.export_history() == []
    obus = [world.enroll(f"v{i}") for i in range(5)]
    for t, obu in zip([4.0, 1.0, 3.0, 0.0, 2.0], obus):
        world.rsu.handle_cert_request(obu.build_cert_request(ZONE, 1), t)
    hist = world.rsu.export_history()
    assert len(hist) == 5
    assert [h.issued_at for h in hist] == sorted(h.issued_at for h in hist)
    assert len({h.pseudo_id for h in hist}) == 5
