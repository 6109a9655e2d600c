"""Check records and report emission (CSV rows + JSON summary)."""

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = ["Report", "write_csv", "write_json", "read_csv", "PROVENANCE_TAGS"]

PROVENANCE_TAGS = ("PAPER", "TRIVIAL", "DERIVED")

CSV_COLUMNS = ("check_id", "inputs", "computed", "target", "tolerance",
               "provenance", "passed")


@dataclass
class Report:
    """One verification row: computed value against its prediction."""

    check_id: str
    computed: float
    target: float
    tolerance: float
    provenance: str
    inputs: str = ""
    passed: bool = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCE_TAGS:
            raise ValueError(f"provenance tag {self.provenance!r} not in "
                             f"{PROVENANCE_TAGS}")
        if self.passed is None:
            if np.isnan(self.target):
                self.passed = bool(abs(self.computed) <= self.tolerance)
            else:
                self.passed = bool(abs(self.computed - self.target)
                                   <= self.tolerance)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, reports) -> None:
    """Deterministic CSV: fixed column order, repr-formatted floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow([r.check_id, r.inputs, _fmt(r.computed),
                        _fmt(r.target), _fmt(r.tolerance), r.provenance,
                        int(r.passed)])


def read_csv(path):
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            out.append(Report(
                check_id=row["check_id"], inputs=row["inputs"],
                computed=float(row["computed"]), target=float(row["target"]),
                tolerance=float(row["tolerance"]),
                provenance=row["provenance"], passed=bool(int(row["passed"]))))
    return out


def write_json(path, reports, config=None, timings=None,
               truncations=None) -> None:
    payload = {
        "config": config or {},
        "timings": timings or {},
        "truncations": truncations or {},
        "n_checks": len(reports),
        "n_passed": sum(1 for r in reports if r.passed),
        "checks": [
            {k: v for k, v in asdict(r).items() if k != "detail"}
            for r in reports
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
