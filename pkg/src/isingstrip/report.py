"""Check records and the machine-readable verification report."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

PASS = "PASS"
FAIL = "FAIL"
KNOWN_BOUNDARY_EXCEPTION = "KNOWN_BOUNDARY_EXCEPTION"
EXTRAPOLATED_PASS = "EXTRAPOLATED_PASS"
EXTRAPOLATED_FAIL = "EXTRAPOLATED_FAIL"
ERRATUM_RECORDED = "ERRATUM_RECORDED"
STATUSES = (PASS, FAIL, KNOWN_BOUNDARY_EXCEPTION, EXTRAPOLATED_PASS, EXTRAPOLATED_FAIL, ERRATUM_RECORDED)

CSV_COLUMNS = ("check", "status", "residual", "tolerance", "fitted_sign", "wall_time", "params", "note")


def _clean(v):
    """JSON-safe floats: non-finite values become strings."""
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class CheckRecord:
    check: str
    status: str
    params: dict = field(default_factory=dict)
    residual: float | None = None
    tolerance: float | None = None
    fitted_sign: int | None = None
    wall_time: float = 0.0
    note: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.residual is not None:
            self.residual = float(self.residual)


def status_for(residual: float, tolerance: float, extrapolated: bool = False) -> str:
    ok = residual <= tolerance
    if extrapolated:
        return EXTRAPOLATED_PASS if ok else EXTRAPOLATED_FAIL
    return PASS if ok else FAIL


def make_run_id(config: dict, seed: int) -> str:
    blob = json.dumps({"config": _clean(config), "seed": seed}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class VerificationReport:
    config: dict
    seed: int
    records: list[CheckRecord] = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    error: str | None = None

    @property
    def run_id(self) -> str:
        return make_run_id(self.config, self.seed)

    def extend(self, records):
        self.records.extend(records)

    @property
    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.status == FAIL]

    @property
    def ok(self) -> bool:
        return not self.failures and self.error is None

    def counts(self) -> dict[str, int]:
        out = {s: 0 for s in STATUSES}
        for r in self.records:
            out[r.status] += 1
        return out

    def to_dict(self) -> dict:
        return _clean(
            {
                "run_id": self.run_id,
                "timestamp": self.timestamp,
                "seed": self.seed,
                "config": self.config,
                "counts": self.counts(),
                "error": self.error,
                "records": [asdict(r) for r in self.records],
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([
                r.check,
                r.status,
                "" if r.residual is None else repr(r.residual),
                "" if r.tolerance is None else repr(r.tolerance),
                "" if r.fitted_sign is None else r.fitted_sign,
                f"{r.wall_time:.6f}",
                json.dumps(_clean(r.params), sort_keys=True),
                r.note,
            ])
        return buf.getvalue()
