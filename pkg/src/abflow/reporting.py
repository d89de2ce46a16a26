"""Self-contained measurement reports with deterministic serialization.

Every sweep in this package returns an EstimateReport whose pass flag is a
pure function of the recorded numbers: each check captures a measured value,
a bound, and a comparison kind, so the flag can be recomputed from the
serialized artifact alone.  JSON output is key-sorted with repr-exact floats
and no timestamps, which makes reports byte-identical across runs with the
same config and seed.
"""

import json
from dataclasses import dataclass, field


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return {"re": float(x.real), "im": float(x.imag)}
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
        return _jsonable(x) if isinstance(x, complex) else x
    return x


@dataclass(frozen=True)
class Check:
    """One recorded comparison: value <kind> bound."""

    name: str
    value: float
    bound: float
    kind: str = "le"

    def passed(self):
        if self.kind == "le":
            return self.value <= self.bound
        if self.kind == "lt":
            return self.value < self.bound
        if self.kind == "ge":
            return self.value >= self.bound
        raise ValueError(f"unknown check kind {self.kind!r}")

    def as_dict(self):
        return {"name": self.name, "value": float(self.value),
                "bound": float(self.bound), "kind": self.kind,
                "passed": bool(self.passed())}


@dataclass
class EstimateReport:
    """Measured constants, trend diagnostics, and pass/fail checks."""

    name: str
    grid: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    trends: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add_check(self, name, value, bound, kind="le"):
        self.checks.append(Check(name, float(value), float(bound), kind))

    @property
    def passed(self):
        return all(c.passed() for c in self.checks)

    def as_dict(self):
        return {
            "name": self.name,
            "grid": _jsonable(self.grid),
            "constants": _jsonable(self.constants),
            "trends": _jsonable(self.trends),
            "tolerances": _jsonable(self.tolerances),
            "checks": [c.as_dict() for c in self.checks],
            "notes": list(self.notes),
            "passed": bool(self.passed),
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True,
                          separators=(",", ":")) + "\n"


def csv_text(header, rows):
    """Deterministic CSV: repr-exact floats, '\n' newlines, no quoting."""
    def cell(v):
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"
