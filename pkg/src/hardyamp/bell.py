"""Bell scenarios, conditional-probability boxes, Hardy frames and linear functionals.

A box is stored as a dense array ``p[x, y, a, b] = P(a, b | x, y)``.  Events are
always written in the ``(a, b, x, y)`` order used for Hardy frames.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EQ_TOL = 1e-9
ZERO_TOL = 1e-12


class StructuralError(ValueError):
    """Shapes or indices do not fit the Bell scenario."""


class DomainError(ValueError):
    """A value lies outside the domain an operation accepts."""


class CapacityError(RuntimeError):
    """An exhaustive computation would exceed its size guard."""


@dataclass(frozen=True)
class BellScenario:
    nX: int
    nY: int
    nA: int
    nB: int

    def __post_init__(self):
        for name in ("nX", "nY", "nA", "nB"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise StructuralError(f"{name} must be a positive integer, got {v!r}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.nX, self.nY, self.nA, self.nB)

    @property
    def size(self) -> int:
        return self.nX * self.nY * self.nA * self.nB

    def contains(self, event) -> bool:
        a, b, x, y = event
        return 0 <= a < self.nA and 0 <= b < self.nB and 0 <= x < self.nX and 0 <= y < self.nY

    def to_dict(self) -> dict:
        return {"nX": self.nX, "nY": self.nY, "nA": self.nA, "nB": self.nB}

    @classmethod
    def from_dict(cls, d: dict) -> "BellScenario":
        return cls(int(d["nX"]), int(d["nY"]), int(d["nA"]), int(d["nB"]))


CHSH = BellScenario(2, 2, 2, 2)


@dataclass(frozen=True, eq=False)
class ConditionalBox:
    scenario: BellScenario
    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.shape != self.scenario.shape:
            raise StructuralError(f"table shape {arr.shape} does not match scenario {self.scenario.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    def prob(self, a, b, x, y) -> float:
        return float(self.p[x, y, a, b])

    def marginal_a(self) -> np.ndarray:
        """P(a|x) as an (nX, nY, nA) array, one copy per Bob input."""
        return self.p.sum(axis=3)

    def marginal_b(self) -> np.ndarray:
        return self.p.sum(axis=2)

    def mix(self, other: "ConditionalBox", weight: float) -> "ConditionalBox":
        """Return ``(1 - weight) * self + weight * other``."""
        if other.scenario != self.scenario:
            raise StructuralError("cannot mix boxes from different scenarios")
        return ConditionalBox(self.scenario, (1 - weight) * self.p + weight * other.p)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionalBox":
        return cls(BellScenario.from_dict(d["scenario"]), np.array(d["p"], dtype=float))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "ConditionalBox":
        return cls.from_dict(json.loads(Path(path).read_text()))


def uniform_box(scenario: BellScenario) -> ConditionalBox:
    return ConditionalBox(scenario, np.full(scenario.shape, 1.0 / (scenario.nA * scenario.nB)))


def deterministic_box(scenario: BellScenario, alice, bob) -> ConditionalBox:
    """Local deterministic box where Alice answers ``alice[x]`` and Bob ``bob[y]``."""
    p = np.zeros(scenario.shape)
    for x in range(scenario.nX):
        for y in range(scenario.nY):
            p[x, y, alice[x], bob[y]] = 1.0
    return ConditionalBox(scenario, p)


def pr_box() -> ConditionalBox:
    p = np.zeros(CHSH.shape)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if a ^ b == x * y:
            p[x, y, a, b] = 0.5
    return ConditionalBox(CHSH, p)


def box_from_blocks(blocks) -> ConditionalBox:
    """Build a box from the nested layout ``blocks[x][y][a][b]``."""
    arr = np.array(blocks, dtype=float)
    return ConditionalBox(BellScenario(*arr.shape), arr)


# --- validation -------------------------------------------------------------

@dataclass
class Violation:
    kind: str  # "normalization" | "no-signaling-A" | "no-signaling-B"
    where: tuple
    residual: float


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    max_normalization_residual: float = 0.0
    max_ns_residual: float = 0.0

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def validate_box(box: ConditionalBox, require_ns: bool = True, tol: float = EQ_TOL) -> ValidationReport:
    """List every normalization / no-signaling equation the box violates.

    Raises ``DomainError`` on negative entries (beyond ``-tol``).
    """
    p = box.p
    if np.any(p < -tol):
        x, y, a, b = np.argwhere(p < -tol)[0]
        raise DomainError(f"negative entry P({a},{b}|{x},{y}) = {p[x, y, a, b]}")
    rep = ValidationReport()
    sums = p.sum(axis=(2, 3))
    for x, y in np.ndindex(sums.shape):
        r = float(sums[x, y] - 1.0)
        rep.max_normalization_residual = max(rep.max_normalization_residual, abs(r))
        if abs(r) > tol:
            rep.violations.append(Violation("normalization", (x, y), r))
    if require_ns:
        pa = p.sum(axis=3)  # (x, y, a)
        for x, y, a in np.ndindex(pa.shape):
            if y == 0:
                continue
            r = float(pa[x, y, a] - pa[x, 0, a])
            rep.max_ns_residual = max(rep.max_ns_residual, abs(r))
            if abs(r) > tol:
                rep.violations.append(Violation("no-signaling-A", (x, a, y), r))
        pb = p.sum(axis=2)  # (x, y, b)
        for x, y, b in np.ndindex(pb.shape):
            if x == 0:
                continue
            r = float(pb[x, y, b] - pb[0, y, b])
            rep.max_ns_residual = max(rep.max_ns_residual, abs(r))
            if abs(r) > tol:
                rep.violations.append(Violation("no-signaling-B", (y, b, x), r))
    return rep


# --- Hardy frames -----------------------------------------------------------

@dataclass(frozen=True)
class HardyFrame:
    scenario: BellScenario
    zero_set: tuple
    hardy_event: tuple

    def __post_init__(self):
        zs = tuple(tuple(int(v) for v in e) for e in self.zero_set)
        he = tuple(int(v) for v in self.hardy_event)
        if len(he) != 4 or any(len(e) != 4 for e in zs):
            raise StructuralError("events are (a, b, x, y) quadruples")
        if he in zs:
            raise StructuralError(f"hardy event {he} is also in the zero set")
        for e in zs + (he,):
            if not self.scenario.contains(e):
                raise StructuralError(f"event {e} outside scenario {self.scenario.shape}")
        object.__setattr__(self, "zero_set", zs)
        object.__setattr__(self, "hardy_event", he)

    def zero_mask(self) -> np.ndarray:
        """Boolean array in box layout ``[x, y, a, b]`` marking the zero set."""
        m = np.zeros(self.scenario.shape, dtype=bool)
        for a, b, x, y in self.zero_set:
            m[x, y, a, b] = True
        return m

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "zeroSet": [list(e) for e in self.zero_set],
            "hardyEvent": list(self.hardy_event),
        }

    @classmethod
    def from_dict(cls, d: dict, scenario: BellScenario | None = None) -> "HardyFrame":
        sc = scenario or BellScenario.from_dict(d["scenario"])
        return cls(sc, tuple(map(tuple, d["zeroSet"])), tuple(d["hardyEvent"]))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path, scenario: BellScenario | None = None) -> "HardyFrame":
        return cls.from_dict(json.loads(Path(path).read_text()), scenario)


def hardy_frame_222() -> HardyFrame:
    """The original Hardy paradox: zeros at (0,1|0,1), (1,0|1,0), (0,0|1,1)."""
    return HardyFrame(CHSH, ((0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1)), (0, 0, 0, 0))


def _check_frame(box: ConditionalBox, frame: HardyFrame):
    if box.scenario != frame.scenario:
        raise StructuralError(f"box scenario {box.scenario} != frame scenario {frame.scenario}")


def hardy_quantities(box: ConditionalBox, frame: HardyFrame) -> tuple[float, float, float]:
    """Return ``(p_H, z_H, B_H)`` with ``B_H = p_H - z_H``."""
    _check_frame(box, frame)
    a, b, x, y = frame.hardy_event
    p_h = float(box.p[x, y, a, b])
    z_h = float(sum(box.p[x_, y_, a_, b_] for a_, b_, x_, y_ in frame.zero_set))
    return p_h, z_h, p_h - z_h


# --- functionals --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BellFunctional:
    """Coefficients ``coeff[x, y, a, b]`` of a linear functional on boxes.

    With ``apply_to_joint`` the coefficients multiply joint frequencies
    ``nu(x, y) * P(a, b|x, y)``; otherwise they act on conditionals directly.
    """

    scenario: BellScenario
    coeff: np.ndarray
    apply_to_joint: bool = True

    def __post_init__(self):
        c = np.array(self.coeff, dtype=float)
        if c.shape != self.scenario.shape:
            raise StructuralError(f"coefficient shape {c.shape} != scenario {self.scenario.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeff", c)

    def indicator(self, a, b, x, y) -> float:
        return float(self.coeff[x, y, a, b])


def sv_bounds(eps: float, bits: int = 2) -> tuple[float, float]:
    """Worst-case ``(p_min, p_max)`` of an input pair drawn with ``bits`` SV bits."""
    return (0.5 - eps) ** bits, (0.5 + eps) ** bits


def mdl_functional(frame: HardyFrame, eps: float, bits: int = 2) -> BellFunctional:
    """MDL indicator: ``(1/2-eps)^bits`` on the Hardy event, ``-(1/2+eps)^bits`` on zeros.

    ``bits`` is the number of SV bits spent choosing an input pair; the default
    of 2 is one bit per party.
    """
    if not 0 <= eps < 0.5:
        raise DomainError(f"eps must lie in [0, 1/2), got {eps}")
    lo, hi = sv_bounds(eps, bits)
    c = np.zeros(frame.scenario.shape)
    a, b, x, y = frame.hardy_event
    c[x, y, a, b] = lo
    for a_, b_, x_, y_ in frame.zero_set:
        c[x_, y_, a_, b_] = -hi
    return BellFunctional(frame.scenario, c, apply_to_joint=True)


def uniform_inputs(scenario: BellScenario) -> np.ndarray:
    return np.full((scenario.nX, scenario.nY), 1.0 / (scenario.nX * scenario.nY))


def evaluate_functional(f: BellFunctional, box: ConditionalBox, input_dist=None) -> float:
    """Return ``sum nu(x,y) c(a,b,x,y) P(a,b|x,y)`` (``nu`` ignored for conditional functionals)."""
    if f.scenario != box.scenario:
        raise StructuralError("functional and box scenarios differ")
    if not f.apply_to_joint:
        return float(np.sum(f.coeff * box.p))
    nu = uniform_inputs(box.scenario) if input_dist is None else np.asarray(input_dist, dtype=float)
    if nu.shape != (box.scenario.nX, box.scenario.nY):
        raise StructuralError(f"input distribution shape {nu.shape} does not match scenario")
    if abs(nu.sum() - 1.0) > EQ_TOL or np.any(nu < 0):
        raise DomainError("input distribution must be nonnegative and sum to 1")
    return float(np.einsum("xy,xyab,xyab->", nu, f.coeff, box.p))


def classical_mdl_max(frame: HardyFrame, eps: float, bits: int = 2, cap: int = 10**7) -> float:
    """Exact maximum of the MDL value over local deterministic boxes.

    Each input pair is weighted adversarially within the SV range: ``p_max`` when
    the chosen event carries a positive coefficient, ``p_min`` when negative.
    Returns 0 for every genuine Hardy frame.
    """
    sc = frame.scenario
    n_alice = sc.nA ** sc.nX
    n_bob = sc.nB ** sc.nY
    if n_alice * n_bob > cap:
        raise CapacityError(f"{n_alice * n_bob} deterministic strategy pairs exceed the cap of {cap}")
    lo, hi = sv_bounds(eps, bits)
    c = mdl_functional(frame, eps, bits).coeff
    w = np.where(c > 0, hi * c, lo * c)  # per-event worst case contribution, [x, y, a, b]

    alice = np.array(list(itertools.product(range(sc.nA), repeat=sc.nX)), dtype=np.int64)
    bob = np.array(list(itertools.product(range(sc.nB), repeat=sc.nY)), dtype=np.int64)
    # for each Alice strategy: table over (y, b) of summed contributions
    xs = np.arange(sc.nX)
    per_alice = w[xs[None, :], :, alice, :].sum(axis=1)  # (n_alice, nY, nB)
    per_alice = per_alice.reshape(n_alice, sc.nY * sc.nB)
    bob_onehot = np.zeros((n_bob, sc.nY * sc.nB))
    for y in range(sc.nY):
        bob_onehot[np.arange(n_bob), y * sc.nB + bob[:, y]] = 1.0
    best = -np.inf
    chunk = max(1, 2_000_000 // n_bob)
    for i in range(0, n_alice, chunk):
        vals = per_alice[i:i + chunk] @ bob_onehot.T
        best = max(best, float(vals.max()))
    return best


def chsh_value(box: ConditionalBox) -> float:
    if box.scenario != CHSH:
        raise StructuralError("CHSH value needs the (2,2,2) scenario")
    return float(sum(box.p[x, y, a, b] for x, y, a, b in itertools.product(range(2), repeat=4) if a ^ b == x * y))


# designated CHSH-satisfying pair hashed to S = 0, keyed by (x, y)
DESIGNATED_PAIRS = {(0, 0): (0, 0), (0, 1): (0, 0), (1, 0): (0, 0), (1, 1): (0, 1)}


def hash_outputs(x: int, y: int, a: int, b: int) -> int:
    """One partially random bit per run: 0 iff ``(a, b)`` is the designated pair for ``(x, y)``."""
    return 0 if DESIGNATED_PAIRS[(x, y)] == (a, b) else 1


def mdl_worst_case(box: ConditionalBox, frame: HardyFrame, eps: float, bits: int = 2) -> float:
    """MDL value of ``box`` under the least favourable SV weighting of input pairs.

    Pairs whose indicator-weighted contribution is positive get ``p_min``,
    negative ones ``p_max``.
    """
    _check_frame(box, frame)
    lo, hi = sv_bounds(eps, bits)
    g = np.einsum("xyab,xyab->xy", mdl_functional(frame, eps, bits).coeff, box.p)
    return float(np.sum(np.where(g > 0, lo * g, hi * g)))
