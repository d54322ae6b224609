from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field

CSV_HEADER = ("load", "mean_delay_ms", "loss_ratio", "approval_ratio", "verified_per_300ms")


@dataclass
class MetricsReport:
    """Per-run statistics. Delays in seconds; ratios dimensionless.

    ``loss_ratio`` is overflow drops over every (beacon, receiver in range at
    send time) pair. ``approval_ratio`` is beacon checks over beacon receptions.
    ``verified_per_300ms`` is beacon checks per vehicle per 300 ms.
    """

    load: int
    mean_e2e_delay: float
    loss_ratio: float
    approval_ratio: float
    verified_per_300ms: float
    verifier_count_histogram: dict[int, int] = field(default_factory=dict)
    offered_per_300ms: float = 0.0
    beacons_sent: int = 0
    expected_pairs: int = 0
    delivered_pairs: int = 0
    overflow_pairs: int = 0
    disapproved_pairs: int = 0
    in_flight_pairs: int = 0
    forged_delivered: int = 0
    control_checks: int = 0
    renewals: int = 0
    renewals_rejected: int = 0
    trace_hash: str = ""

    def csv_row(self) -> tuple[str, ...]:
        return (
            str(self.load),
            repr(self.mean_e2e_delay * 1000),
            repr(self.loss_ratio),
            repr(self.approval_ratio),
            repr(self.verified_per_300ms),
        )


def render_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename; no partial files."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
