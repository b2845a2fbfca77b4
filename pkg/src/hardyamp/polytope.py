"""Linear programs over the no-signaling polytope.

Variables are the entries of a box flattened in ``[x, y, a, b]`` order.
Exact Hardy zeros are removed from the variable set (variable fixing); relaxed
zeros add one aggregate equality ``sum_{S0} p = z_H``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bell import (
    CHSH,
    DESIGNATED_PAIRS,
    BellScenario,
    CapacityError,
    ConditionalBox,
    DomainError,
    HardyFrame,
    StructuralError,
    sv_bounds,
    validate_box,
)
from .lp import LPProblem, LPSolution, certificate_residuals, solve

WITNESS_TOL = 1e-8


def ns_equalities(sc: BellScenario) -> tuple[np.ndarray, np.ndarray]:
    """Normalization and no-signaling rows for the flattened box."""
    shape = sc.shape
    idx = np.arange(sc.size).reshape(shape)
    rows = []
    rhs = []
    for x, y in itertools.product(range(sc.nX), range(sc.nY)):
        r = np.zeros(sc.size)
        r[idx[x, y].ravel()] = 1.0
        rows.append(r)
        rhs.append(1.0)
    for x, a, y in itertools.product(range(sc.nX), range(sc.nA), range(1, sc.nY)):
        r = np.zeros(sc.size)
        r[idx[x, y, a, :]] = 1.0
        r[idx[x, 0, a, :]] -= 1.0
        rows.append(r)
        rhs.append(0.0)
    for y, b, x in itertools.product(range(sc.nY), range(sc.nB), range(1, sc.nX)):
        r = np.zeros(sc.size)
        r[idx[x, y, :, b]] = 1.0
        r[idx[0, y, :, b]] -= 1.0
        rows.append(r)
        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def entry_coeff(sc: BellScenario, event) -> np.ndarray:
    a, b, x, y = event
    c = np.zeros(sc.shape)
    c[x, y, a, b] = 1.0
    return c


def hardy_coeff(frame: HardyFrame) -> np.ndarray:
    """Coefficients of ``B_H = p_H - z_H``."""
    c = entry_coeff(frame.scenario, frame.hardy_event)
    c[frame.zero_mask()] = -1.0
    return c


def chsh_coeff(sc: BellScenario = CHSH) -> np.ndarray:
    c = np.zeros(sc.shape)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if a ^ b == x * y:
            c[x, y, a, b] = 1.0
    return c


def mdl_level(delta: float, eps: float, bits: int = 2) -> float:
    """Worst-case lower bound on ``B_H`` implied by an MDL value of ``delta``."""
    lo, hi = sv_bounds(eps, bits)
    return delta / (lo * hi)


@dataclass
class NSProgram:
    """Builder for an LP over boxes of a fixed scenario.

    ``zeros`` is ``"exact"`` (entries of the frame's zero set fixed to 0),
    ``"relaxed"`` (their sum fixed to ``z_h``) or ``"none"``.
    """

    scenario: BellScenario
    objective: np.ndarray
    sense: str = "max"
    frame: HardyFrame | None = None
    zeros: str = "none"
    z_h: float = 0.0
    ub: list = field(default_factory=list)  # (coeff, rhs): coeff . p <= rhs
    eq: list = field(default_factory=list)  # (coeff, rhs): coeff . p == rhs

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != self.scenario.shape:
            raise StructuralError(f"objective shape {self.objective.shape} != scenario {self.scenario.shape}")
        if self.zeros not in ("exact", "relaxed", "none"):
            raise ValueError(f"unknown zero handling {self.zeros!r}")
        if self.zeros != "none" and self.frame is None:
            raise StructuralError("zero handling needs a Hardy frame")
        if self.frame is not None and self.frame.scenario != self.scenario:
            raise StructuralError("frame scenario differs from program scenario")

    def at_least(self, coeff, level: float) -> "NSProgram":
        self.ub.append((-np.asarray(coeff, dtype=float), -float(level)))
        return self

    def at_most(self, coeff, level: float) -> "NSProgram":
        self.ub.append((np.asarray(coeff, dtype=float), float(level)))
        return self

    def equal(self, coeff, level: float) -> "NSProgram":
        self.eq.append((np.asarray(coeff, dtype=float), float(level)))
        return self

    def with_mdl(self, delta: float, eps: float, bits: int = 2) -> "NSProgram":
        """Add the worst-case consequence ``B_H >= delta / (p_min p_max)`` of an MDL value ``delta``."""
        if self.frame is None:
            raise StructuralError("an MDL constraint needs a Hardy frame")
        return self.at_least(hardy_coeff(self.frame), mdl_level(delta, eps, bits))

    def free_mask(self) -> np.ndarray:
        if self.zeros == "exact":
            return ~self.frame.zero_mask().ravel()
        return np.ones(self.scenario.size, dtype=bool)

    def to_lp(self) -> LPProblem:
        sc = self.scenario
        A, b = ns_equalities(sc)
        eq_rows = [A]
        eq_rhs = [b]
        if self.zeros == "relaxed":
            eq_rows.append(self.frame.zero_mask().ravel()[None, :].astype(float))
            eq_rhs.append(np.array([self.z_h]))
        for c, r in self.eq:
            eq_rows.append(np.asarray(c, dtype=float).ravel()[None, :])
            eq_rhs.append(np.array([r]))
        A_ub = np.array([np.asarray(c, dtype=float).ravel() for c, _ in self.ub]).reshape(-1, sc.size)
        b_ub = np.array([r for _, r in self.ub], dtype=float)
        free = self.free_mask()
        labels = [tuple(int(v) for v in (e[2], e[3], e[0], e[1])) for e in np.ndindex(sc.shape)]
        labels = [lab for lab, f in zip(labels, free) if f]  # (a, b, x, y)
        return LPProblem(
            c=self.objective.ravel()[free],
            sense=self.sense,
            A_eq=np.vstack(eq_rows)[:, free],
            b_eq=np.concatenate(eq_rhs),
            A_ub=A_ub[:, free],
            b_ub=b_ub,
            labels=labels,
        )


@dataclass
class NSSolution:
    status: str
    value: float
    witness: ConditionalBox | None
    lp: LPSolution
    problem: LPProblem

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def certificate(self) -> dict:
        return certificate_residuals(self.problem, self.lp)


LEX_TOL = 1e-9


def lex_smallest_optimum(problem: LPProblem, value: float, tol: float = LEX_TOL) -> np.ndarray:
    """Lexicographically smallest optimal point: minimise each variable in turn.

    Every stage keeps the objective within ``tol`` of ``value`` and the earlier
    variables within ``tol`` of their minima, so one LP is solved per variable.
    """
    n = problem.n
    sign = -1.0 if problem.sense == "max" else 1.0
    rows = [problem.A_ub, sign * problem.c[None, :]]
    rhs = [problem.b_ub, np.array([sign * value + tol])]
    x = None
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        stage = LPProblem(e, "min", problem.A_eq, problem.b_eq, np.vstack(rows), np.concatenate(rhs))
        sol = solve(stage)
        if not sol.optimal:
            raise RuntimeError(f"lexicographic stage {i} returned {sol.status}")
        x = sol.x
        rows.append(e[None, :])
        rhs.append(np.array([sol.value + tol]))
    return np.zeros(0) if x is None else np.maximum(x, 0.0)


def solve_ns(prog: NSProgram, tie_break: str = "none") -> NSSolution:
    """Solve ``prog``; ``tie_break="lex"`` returns the lexicographically smallest optimal box."""
    if tie_break not in ("none", "lex"):
        raise ValueError(f"unknown tie-break rule {tie_break!r}")
    problem = prog.to_lp()
    sol = solve(problem)
    if not sol.optimal:
        return NSSolution(sol.status, float("nan"), None, sol, problem)
    x = lex_smallest_optimum(problem, sol.value) if tie_break == "lex" else sol.x
    flat = np.zeros(prog.scenario.size)
    flat[prog.free_mask()] = x
    box = ConditionalBox(prog.scenario, flat.reshape(prog.scenario.shape))
    rep = validate_box(box, tol=WITNESS_TOL)
    if not rep.valid:
        raise RuntimeError(f"LP witness fails validation: {rep.violations[:3]}")
    return NSSolution("optimal", sol.value, box, sol, problem)


# --- (2,2,2) bounds ---------------------------------------------------------

@dataclass
class EntryBound:
    event: tuple  # (a, b, x, y)
    lower: float
    upper: float
    status: str = "optimal"


def bound_all_entries(frame: HardyFrame, delta: float, eps: float, bits: int = 2) -> dict:
    """LP range of every box entry given the MDL value is at least ``delta``.

    Returns ``{(a, b, x, y): EntryBound}``; an infeasible level marks every
    entry with status ``"infeasible"`` and NaN bounds.
    """
    if delta < 0:
        raise DomainError(f"delta must be nonnegative, got {delta}")
    sc = frame.scenario
    out = {}
    for x, y, a, b in np.ndindex(sc.shape):
        ev = (a, b, x, y)
        res = []
        for sense in ("min", "max"):
            prog = NSProgram(sc, entry_coeff(sc, ev), sense, frame=frame).with_mdl(delta, eps, bits)
            res.append(solve_ns(prog))
        if not all(r.optimal for r in res):
            bad = next(r.status for r in res if not r.optimal)
            out[ev] = EntryBound(ev, float("nan"), float("nan"), bad)
        else:
            out[ev] = EntryBound(ev, res[0].value, res[1].value)
    return out


def max_hardy_probability(frame: HardyFrame, zeros: str = "exact", z_h: float = 0.0) -> NSSolution:
    sc = frame.scenario
    prog = NSProgram(sc, entry_coeff(sc, frame.hardy_event), "max", frame=frame, zeros=zeros, z_h=z_h)
    return solve_ns(prog)


def chsh_hardy_gap() -> NSSolution:
    """Minimum of ``B_CHSH - 2 B_H`` over the (2,2,2) no-signaling polytope."""
    from .bell import hardy_frame_222

    c = chsh_coeff() - 2.0 * hardy_coeff(hardy_frame_222())
    return solve_ns(NSProgram(CHSH, c, "min"))


def hardy_saturating_box(z_h: float = 0.0) -> ConditionalBox:
    """(2,2,2) box with ``z_H = z_h`` on the standard frame and ``p_H = (1 + z_h)/2``."""
    z = float(z_h)
    if not 0 <= z <= 1:
        raise DomainError(f"z_H must lie in [0, 1], got {z}")
    blocks = [
        [[[(1 + z) / 2, 0], [0, (1 - z) / 2]], [[0.5, z / 2], [0, (1 - z) / 2]]],
        [[[0.5, 0], [z / 2, (1 - z) / 2]], [[0, 0.5], [0.5, 0]]],
    ]
    return ConditionalBox(CHSH, np.array(blocks))


# --- 2 x n scenarios ----------------------------------------------------------

MAX_BOB_SETTINGS = 12


def witness_box_2xn(n: int, z_h: float = 0.0) -> ConditionalBox:
    """Explicit box in scenario (2, n, n, n) attaining ``p_H = (n-1)/n + z_h/n``."""
    if n < 2:
        raise DomainError(f"need at least 2 Bob settings, got {n}")
    z = float(z_h)
    p = np.zeros((2, n, n, n))
    p[0, 0, 0, 0] = (n - 1) / n + z / n
    p[0, 0, 1, n - 1] = (1 - z) / n
    for k in range(1, n):
        p[0, k, 0, : n - 1] = 1 / n
        p[0, k, 1, n - 1] = (1 - z) / n
        p[0, k, 0, n - 1] += z / n
    p[1, 0, : n - 1, 0] = 1 / n
    p[1, 0, n - 1, n - 1] = (1 - z) / n
    p[1, 0, n - 1, 0] += z / n
    for k in range(1, n):
        for j in range(n):
            p[1, k, j, (n - k + j) % n] = 1 / n
    return ConditionalBox(BellScenario(2, n, n, n), p)


def hardy_frame_2xn(n: int) -> HardyFrame:
    """Frame whose zeros are the entries unused by the noiseless 2 x n witness box."""
    box = witness_box_2xn(n, 0.0)
    zeros = [(a, b, x, y) for x, y, a, b in zip(*np.nonzero(box.p == 0))]
    return HardyFrame(box.scenario, tuple(zeros), (0, 0, 0, 0))


@dataclass
class TwoByNResult:
    n: int
    z_h: float
    value: float
    closed_form: float
    witness: ConditionalBox
    lp_witness: ConditionalBox
    certificate: dict


def max_pH_2xn(n: int, z_h: float = 0.0) -> TwoByNResult:
    """LP maximum of ``p_H`` with zero-set mass ``z_h`` on the 2 x n frame, plus the explicit witness."""
    if n < 2:
        raise DomainError(f"need at least 2 Bob settings, got {n}")
    if n > MAX_BOB_SETTINGS:
        raise CapacityError(f"n = {n} exceeds the LP size guard of {MAX_BOB_SETTINGS}")
    if not 0 <= z_h <= 1:
        raise DomainError(f"z_H must lie in [0, 1], got {z_h}")
    frame = hardy_frame_2xn(n)
    sol = max_hardy_probability(frame, zeros="relaxed", z_h=z_h)
    if not sol.optimal:
        raise RuntimeError(f"2 x {n} LP returned {sol.status}")
    return TwoByNResult(n, z_h, sol.value, (n - 1) / n + z_h / n, witness_box_2xn(n, z_h), sol.witness, sol.certificate())


# --- randomness beyond the Hardy input ------------------------------------

@dataclass
class BlockReport:
    inputs: tuple  # (x, y)
    outputs: tuple  # ((a, b), ...)
    max_pH_if_deterministic: float  # max p_H when the block has probability 1 (0 / nan: impossible)
    beta_min: float
    beta_max: float
    certified: bool

    @property
    def margin(self) -> float:
        return min(self.beta_min, 1.0 - self.beta_max)


@dataclass
class RandomnessReport:
    max_pH: float  # overall NS maximum of p_H under exact zeros
    min_hardy: float
    blocks: list[BlockReport]


def default_blocks(frame: HardyFrame) -> dict:
    """Designated output blocks, keyed by input pair.

    (2,2,2) with the standard frame: the designated CHSH-satisfying pairs.
    Otherwise: for every Bob input with Alice on the Hardy input, the outputs
    with Alice's Hardy outcome that are not in the zero set.
    """
    sc = frame.scenario
    if sc == CHSH:
        return {xy: (ab,) for xy, ab in DESIGNATED_PAIRS.items()}
    aH, bH, xH, yH = frame.hardy_event
    zs = set(frame.zero_set)
    out = {}
    for y in range(sc.nY):
        outs = tuple((aH, b) for b in range(sc.nB) if (aH, b, xH, y) not in zs)
        if y == yH:
            outs = ((aH, bH),)
        out[(xH, y)] = outs
    return out


def randomness_other_inputs(frame: HardyFrame, blocks: dict | None = None, min_hardy: float = 0.01,
                            tol: float = 1e-9) -> RandomnessReport:
    """Check, per input pair, that the designated block cannot be deterministic.

    Under exact zeros, each block is LP-maximised and minimised subject to
    ``p_H >= min_hardy``.  ``certified`` means the block is strictly inside
    (0, 1); the margin is the distance to the nearer end.
    """
    sc = frame.scenario
    blocks = default_blocks(frame) if blocks is None else blocks
    hardy = entry_coeff(sc, frame.hardy_event)
    top = max_hardy_probability(frame, zeros="exact")
    reports = []
    for (x, y), outs in blocks.items():
        c = np.zeros(sc.shape)
        for a, b in outs:
            c[x, y, a, b] = 1.0
        det = solve_ns(NSProgram(sc, hardy, "max", frame=frame, zeros="exact").equal(c, 1.0))
        det_val = det.value if det.optimal else 0.0
        rng = []
        for sense in ("min", "max"):
            r = solve_ns(NSProgram(sc, c, sense, frame=frame, zeros="exact").at_least(hardy, min_hardy))
            rng.append(r.value if r.optimal else float("nan"))
        cert = bool(np.isfinite(rng[1]) and rng[0] > tol and rng[1] < 1 - tol)
        reports.append(BlockReport((x, y), tuple(outs), det_val, rng[0], rng[1], cert))
    return RandomnessReport(top.value if top.optimal else float("nan"), min_hardy, reports)


# --- assignment boxes for gadget games --------------------------------------

def ns_assignment_box(game, f) -> ConditionalBox:
    """No-signaling box built from a fractional vertex weighting ``f``.

    Alice on clique ``x`` outputs vertex ``v`` with probability ``f(v)``.  When
    the two cliques share vertices, a shared vertex is answered identically by
    Bob; the remaining outputs are drawn independently from the leftover mass.
    ``game`` needs ``scenario``, ``cliques`` and ``orthogonal(u, v)``.
    """
    f = np.asarray(f, dtype=float)
    for i, cl in enumerate(game.cliques):
        s = f[list(cl)].sum()
        if abs(s - 1.0) > 1e-9:
            raise DomainError(f"assignment sums to {s} on clique {i} {tuple(cl)}")
    if np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
        raise DomainError("assignment values must lie in [0, 1]")
    sc = game.scenario
    p = np.zeros(sc.shape)
    for x, cx in enumerate(game.cliques):
        for y, cy in enumerate(game.cliques):
            shared = set(cx) & set(cy)
            F = sum(f[v] for v in shared)
            for a, u in enumerate(cx):
                for b, v in enumerate(cy):
                    if u in shared or v in shared:
                        p[x, y, a, b] = f[u] if u == v else 0.0
                    elif F < 1 - 1e-12:
                        val = f[u] * f[v] / (1 - F)
                        if val > 1e-12 and game.orthogonal(u, v):
                            raise DomainError(
                                f"orthogonal vertices {u} and {v} both carry weight (cliques {x}, {y})")
                        p[x, y, a, b] = val
    return ConditionalBox(sc, p)
