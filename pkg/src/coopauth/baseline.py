"""Verify-everything receiver used as the comparison policy (GSIS-style).

Same credentials and wire formats as the cooperative OBU; the only
difference is that every received beacon is checked locally, there is no
neighbor-list gossip and no waiting window.
"""

from __future__ import annotations

import math

from .messages import Beacon, DisapprovalMsg, NeighborListMsg
from .obu import IGNORE, VERIFY_NOW, DisapprovalActions, Ignore, Obu, VerifyNow


class BaselineObu(Obu):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.next_list_at = math.inf

    def on_receive_beacon(self, beacon: Beacon, now: float) -> VerifyNow | Ignore:
        return baseline_on_receive(self, beacon, now)

    def verify_now(self, beacon: Beacon, now: float, announce: bool = False):
        return super().verify_now(beacon, now, announce=False)

    def on_receive_neighbor_list(self, msg: NeighborListMsg, now: float) -> bool:
        return False

    def on_receive_disapproval(self, d: DisapprovalMsg, now: float) -> DisapprovalActions:
        return DisapprovalActions()


def baseline_on_receive(state: Obu, beacon: Beacon, now: float) -> VerifyNow | Ignore:
    """Every fresh beacon becomes one verify job."""
    mid = beacon.message_id
    if mid in state.seen_messages or beacon.pseudo_id == state.pseudo_id:
        return IGNORE
    state.seen_messages[mid] = now
    return VERIFY_NOW
