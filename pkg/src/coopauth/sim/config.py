from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from ..crypto import DEFAULT_SCHEME, available_schemes
from ..errors import ConfigError
from ..obu import ObuParams
from ..rsu import DEFAULT_CERT_LIFETIME, DEFAULT_DELTA_MAX

# 43 signature checks per 300 ms
DEFAULT_VERIFY_COST = 0.300 / 43


class Protocol(enum.Enum):
    COOPERATIVE = "cooperative"
    BASELINE = "baseline"


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation input. Lengths in metres, times in seconds, rates in bit/s."""

    area: float = 3000.0
    grid_spacing: float = 750.0
    zone_size: float = 1000.0
    vehicle_count: int = 100
    speed_range_kmh: tuple[float, float] = (30.0, 75.0)
    coverage_radius: float = 300.0
    bandwidth: float = 6e6
    duration: float = 100.0
    warmup: float = 0.0
    seed: int = 1
    protocol: Protocol = Protocol.COOPERATIVE
    obu_params: ObuParams = field(default_factory=ObuParams)
    verify_cost: float = DEFAULT_VERIFY_COST
    sign_cost: float | None = None  # None: same as verify_cost
    rx_buffer_capacity: int = 100
    delta_max: float = DEFAULT_DELTA_MAX
    cert_lifetime: float = DEFAULT_CERT_LIFETIME
    mobility_dt: float = 0.1
    forger_fraction: float = 0.0
    revocation_time: float | None = None
    crypto_scheme: str = DEFAULT_SCHEME

    def __post_init__(self):
        if self.sign_cost is None:
            object.__setattr__(self, "sign_cost", self.verify_cost)
        positive = (
            "area grid_spacing zone_size coverage_radius bandwidth duration verify_cost "
            "sign_cost delta_max cert_lifetime mobility_dt"
        ).split()
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(name, f"must be a finite number > 0, got {value!r}")
        if not isinstance(self.vehicle_count, int) or self.vehicle_count < 2:
            raise ConfigError("vehicle_count", f"must be an integer >= 2, got {self.vehicle_count!r}")
        lo, hi = self.speed_range_kmh
        if not 0 < lo <= hi:
            raise ConfigError("speed_range_kmh", f"need 0 < min <= max, got {self.speed_range_kmh}")
        ratio = self.area / self.grid_spacing
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("grid_spacing", "must divide the area side evenly")
        if not 0 <= self.warmup < self.duration:
            raise ConfigError("warmup", "must lie in [0, duration)")
        if not isinstance(self.rx_buffer_capacity, int) or self.rx_buffer_capacity < 1:
            raise ConfigError("rx_buffer_capacity", "must be an integer >= 1")
        if not 0 <= self.forger_fraction <= 1:
            raise ConfigError("forger_fraction", "must lie in [0, 1]")
        if self.revocation_time is not None and not self.revocation_time >= 0:
            raise ConfigError("revocation_time", "must be >= 0")
        if self.crypto_scheme not in available_schemes():
            raise ConfigError("crypto_scheme", f"unknown scheme {self.crypto_scheme!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")

    @property
    def beacon_period(self) -> float:
        return self.obu_params.beacon_period

    @property
    def speed_range(self) -> tuple[float, float]:
        """Speed bounds in m/s."""
        lo, hi = self.speed_range_kmh
        return lo / 3.6, hi / 3.6

    def with_(self, **changes) -> "ScenarioConfig":
        obu_changes = {k: changes.pop(k) for k in list(changes) if k in ObuParams.__dataclass_fields__}
        if obu_changes:
            changes["obu_params"] = replace(self.obu_params, **obu_changes)
        return replace(self, **changes)
