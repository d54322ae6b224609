"""
Sharing the verification work
=============================

Twelve vehicles that hear each other exchange signed neighbor lists. When one
of them beacons, only a few receivers check the signature; the rest wait a
short window and deliver unless someone raises a disapproval.
"""

import itertools
import random
from dataclasses import replace

from coopauth import crypto
from coopauth.authority import Authority, rsu_identity
from coopauth.messages import Kinematics
from coopauth.obu import ElectionStrategy, Obu, ObuParams, VerifyNow, Wait
from coopauth.rsu import Rsu

ta = Authority.create(seed=b"coop")
rsu = Rsu("z", 0, ta.provision_rsu("z", 0), ta.public_key, id_rng=random.Random(2))
rsu_pub = crypto.derive_identity_public(ta.public_params, rsu_identity("z", 0))
params = ObuParams(p=3, election_strategy=ElectionStrategy.P_NEAREST)

cars = []
for i in range(12):
    keys, ltc = ta.enroll_vehicle(f"car-{i}", 0.0)
    car = Obu(keys, ltc, ta.public_params, params, [rsu_pub])
    car.install_temp_cert(rsu.handle_cert_request(car.build_cert_request("z", 0), 0.0).cert)
    cars.append(car)

kin = Kinematics(100.0, 200.0, 13.9, 0.0, 0.0)

# %% One round of beacons and one round of neighbor lists gives everyone full knowledge.
for a, b in itertools.permutations(cars, 2):
    beacon = a.make_beacon(kin, 0.0)
    b.on_receive_beacon(beacon, 0.0)
    b.verify_now(beacon, 0.0)
for a, b in itertools.permutations(cars, 2):
    b.on_receive_neighbor_list(a.make_neighbor_list(0.1), 0.1)

# %% An honest beacon: who checks it?
sender, receivers = cars[0], cars[1:]
beacon = sender.make_beacon(kin, 1.0)
actions = [r.on_receive_beacon(beacon, 1.0) for r in receivers]
checkers = [r for r, a in zip(receivers, actions) if isinstance(a, VerifyNow)]
waiting = [r for r, a in zip(receivers, actions) if isinstance(a, Wait)]
print(f"{len(checkers)} of {len(receivers)} receivers verify, {len(waiting)} wait 30 ms")
print("checkers are the ids closest to the sender:",
      sorted(abs(r.pseudo_id - sender.pseudo_id) for r in checkers)
      == sorted(abs(r.pseudo_id - sender.pseudo_id) for r in receivers)[: len(checkers)])
for r in checkers:
    r.verify_now(beacon, 1.007)
print("delivered after the window:", sum(len(r.on_timer(1.030).delivered) for r in waiting))

# %% A tampered beacon: the checkers object, everyone else drops it.
forged = replace(sender.make_beacon(kin, 2.0), kinematics=Kinematics(0, 0, 40.0, 0, 0))
actions = [r.on_receive_beacon(forged, 2.0) for r in receivers]
disapprovals = [
    r.verify_now(forged, 2.007).message
    for r, a in zip(receivers, actions)
    if isinstance(a, VerifyNow)
]
for r, a in zip(receivers, actions):
    if isinstance(a, Wait):
        step = r.on_receive_disapproval(disapprovals[0], 2.010)
        assert step.forward and step.recheck is forged
        r.verify_now(forged, 2.017, announce=False)
print("forged beacon delivered by:", sum(len(r.on_timer(2.030).delivered) for r in receivers), "vehicles")
