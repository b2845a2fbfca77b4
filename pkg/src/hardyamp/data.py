"""Count tables: parsing, export and the bundled experimental fixture."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .bell import CHSH, BellScenario, DomainError

PAPER_N = 7655734250
# frequencies f(ab, xy) used for certification, keyed by (a, b, x, y)
PAPER_FREQS = {
    (0, 0, 0, 0): 0.022667675540,
    (0, 1, 0, 1): 0.000384051993,
    (1, 0, 1, 0): 0.000363028536,
    (0, 0, 1, 1): 0.000203651270,
}
FIXTURE = "table1_counts.csv"
CSV_HEADER = ["a", "b", "x", "y", "count"]


class ParseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CountTable:
    scenario: BellScenario
    counts: np.ndarray  # int64 [x, y, a, b]

    def __post_init__(self):
        c = np.array(self.counts)
        if c.shape != self.scenario.shape:
            raise DomainError(f"count shape {c.shape} does not match scenario {self.scenario.shape}")
        if np.any(c < 0):
            raise DomainError("counts must be nonnegative")
        if not np.all(c == np.round(c)):
            raise DomainError("counts must be integers")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def totals(self) -> np.ndarray:
        """Per-setting totals ``[x, y]``."""
        return self.counts.sum(axis=(2, 3))

    def frequencies(self) -> np.ndarray:
        if self.n == 0:
            raise DomainError("count table is empty")
        return self.counts / self.n

    def conditional(self) -> np.ndarray:
        t = self.totals()[:, :, None, None]
        if np.any(t == 0):
            raise DomainError("a setting pair has no counts")
        return self.counts / t

    def rows(self):
        for x, y, a, b in np.ndindex(self.scenario.shape):
            yield a, b, x, y, int(self.counts[x, y, a, b])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "scenario": self.scenario.to_dict(),
            "counts": [dict(zip(CSV_HEADER, r)) for r in self.rows()],
        }, indent=1)


def _build(records, scenario: BellScenario | None) -> CountTable:
    if not records:
        raise ParseError("no count records")
    if scenario is None:
        hi = np.max([r[:4] for r in records], axis=0) + 1
        a, b, x, y = (max(2, int(v)) for v in hi)
        scenario = BellScenario(x, y, a, b)
    c = np.zeros(scenario.shape, dtype=np.int64)
    for a, b, x, y, k in records:
        if not scenario.contains((a, b, x, y)):
            raise ParseError(f"event {(a, b, x, y)} outside scenario {scenario.shape}")
        c[x, y, a, b] += k
    return CountTable(scenario, c)


def parse_counts_csv(text: str, scenario: BellScenario | None = None) -> CountTable:
    lines = [ln for ln in text.splitlines()]
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise ParseError("empty count file")
    lineno, head = body[0]
    if [h.strip() for h in head.split(",")] != CSV_HEADER:
        raise ParseError(f"line {lineno}: expected header {','.join(CSV_HEADER)}")
    records = []
    for lineno, ln in body[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 5:
            raise ParseError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer field in {ln!r}") from None
        if vals[4] < 0:
            raise DomainError(f"line {lineno}: negative count {vals[4]}")
        if min(vals[:4]) < 0:
            raise ParseError(f"line {lineno}: negative index")
        records.append(tuple(vals))
    return _build(records, scenario)


def parse_counts_json(text: str, scenario: BellScenario | None = None) -> CountTable:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: {exc.msg}") from None
    rows = d.get("counts") if isinstance(d, dict) else d
    if not rows:
        raise ParseError("no count records")
    if scenario is None and isinstance(d, dict) and "scenario" in d:
        scenario = BellScenario.from_dict(d["scenario"])
    records = []
    for i, r in enumerate(rows):
        try:
            vals = tuple(int(r[k]) for k in CSV_HEADER)
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"record {i}: needs integer fields {CSV_HEADER}") from None
        if vals[4] < 0:
            raise DomainError(f"record {i}: negative count {vals[4]}")
        records.append(vals)
    return _build(records, scenario)


def ingest_counts(path, fmt: str | None = None, scenario: BellScenario | None = None) -> CountTable:
    p = Path(path)
    fmt = fmt or ("json" if p.suffix.lower() == ".json" else "csv")
    text = p.read_text()
    if fmt == "json":
        return parse_counts_json(text, scenario)
    if fmt == "csv":
        return parse_counts_csv(text, scenario)
    raise ParseError(f"unknown format {fmt!r}")


def export_counts(table: CountTable, path, fmt: str | None = None) -> None:
    p = Path(path)
    fmt = fmt or ("json" if p.suffix.lower() == ".json" else "csv")
    p.write_text(table.to_json() if fmt == "json" else table.to_csv())


def table1_counts() -> CountTable:
    """The bundled experimental count table (exact integers, total ``PAPER_N``)."""
    text = resources.files("hardyamp.fixtures").joinpath(FIXTURE).read_text()
    return parse_counts_csv(text, CHSH)


def paper_frequency_table() -> np.ndarray:
    """Frequencies ``[x, y, a, b]`` holding only the four certification entries."""
    f = np.zeros(CHSH.shape)
    for (a, b, x, y), v in PAPER_FREQS.items():
        f[x, y, a, b] = v
    return f
