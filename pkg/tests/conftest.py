import random

import pytest

from coopauth import crypto
from coopauth.authority import Authority
from coopauth.obu import Obu, ObuParams
from coopauth.rsu import Rsu, Scheduled

ZONE = "zone-0-0"


class World:
    """An authority, one RSU and a set of vehicles holding valid temp certs."""

    def __init__(self, n=0, params=ObuParams(), seed=7, scheme=crypto.DEFAULT_SCHEME):
        self.authority = Authority.create(seed, scheme)
        self.rsu = Rsu(
            ZONE,
            1,
            self.authority.provision_rsu(ZONE, 1),
            self.authority.public_key,
            id_rng=random.Random(seed),
        )
        self.rsu_public = crypto.derive_identity_public(self.authority.public_params, f"{ZONE}#1")
        self.params = params
        self.obus = [self.add_vehicle(f"veh-{i}") for i in range(n)]

    def enroll(self, identity, params=None, on_deliver=None):
        keys, ltc = self.authority.enroll_vehicle(identity, 0.0, seed=identity)
        return Obu(
            keys,
            ltc,
            self.authority.public_params,
            params or self.params,
            [self.rsu_public],
            on_deliver,
        )

    def add_vehicle(self, identity, params=None, on_deliver=None, now=0.0):
        obu = self.enroll(identity, params, on_deliver)
        result = self.rsu.handle_cert_request(obu.build_cert_request(ZONE, 1, identity), now)
        assert isinstance(result, Scheduled), result
        obu.install_temp_cert(result.cert)
        return obu


@pytest.fixture
def world():
    return World()


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
