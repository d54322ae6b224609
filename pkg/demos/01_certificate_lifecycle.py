"""
Pseudonymous certificates from enrollment to tracing
=====================================================

A trusted authority enrolls vehicles, provisions roadside units, and can later
map a pseudonym back to a vehicle. Roadside units hand out short-lived
certificates without learning anything they could not also learn from the
request itself.
"""

import random

from coopauth import crypto
from coopauth.authority import Authority, rsu_identity
from coopauth.certs import CertStatus, check_temp_cert
from coopauth.obu import Obu
from coopauth.rsu import CertRequest, Rsu, Scheduled

# %% The authority and one roadside unit for zone "downtown", epoch 0.
ta = Authority.create(seed=b"demo")
rsu = Rsu("downtown", 0, ta.provision_rsu("downtown", 0), ta.public_key, id_rng=random.Random(1))

# Anyone can compute the RSU's public key from the zone name alone.
rsu_pub = crypto.derive_identity_public(ta.public_params, rsu_identity("downtown", 0))
print("RSU key derivable from its name:", crypto.public_of(rsu.private_key) == rsu_pub)

# %% Enroll a vehicle and request a temporary certificate.
keys, ltc = ta.enroll_vehicle("VIN-4711", now=0.0)
car = Obu(keys, ltc, ta.public_params, issuer_keys=[rsu_pub])
request = car.build_cert_request("downtown", 0)
print("request size on the wire:", len(request.encode()), "octets")

result = rsu.handle_cert_request(request, now=10.0)
assert isinstance(result, Scheduled)
print(f"certificate released at t={result.release_at:.3f}s (random delay breaks timing links)")
car.install_temp_cert(result.cert)
print("pseudonym:", hex(car.pseudo_id))
print("status now:", check_temp_cert(result.cert, rsu_pub, 10.0).value)
print("status at expiry:", check_temp_cert(result.cert, rsu_pub, result.cert.expiration).value)

# %% Requests that must fail, each for its own reason.
thief = ta.enroll_vehicle("VIN-0666", now=0.0)
thief_obu = Obu(*thief, ta.public_params, issuer_keys=[rsu_pub])
rsu.apply_rl_update(ta.revoke("VIN-0666"))
print("revoked vehicle:", rsu.handle_cert_request(thief_obu.build_cert_request("downtown", 0), 11.0))

r1 = car.build_cert_request("downtown", 0, entropy=1)
r2 = car.build_cert_request("downtown", 0, entropy=2)
sig = crypto.sign(car.long_term.private, r1.pseudo_public_key.data + r2.ciphertext)
spliced = CertRequest(r1.pseudo_public_key, r2.ciphertext, sig)
print("spliced request:", rsu.handle_cert_request(spliced, 12.0))
print("wrong zone:", rsu.handle_cert_request(car.build_cert_request("harbour", 0), 12.0))

# %% Misbehaviour: the authority traces the pseudonym with the RSU's history table.
print("trace:", hex(car.pseudo_id), "->", ta.trace(car.pseudo_id, rsu.export_history()))
