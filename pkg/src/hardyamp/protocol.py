"""Protocol simulation and min-entropy certification.

RNG contract: a 64-bit master seed feeds ``numpy.random.SeedSequence``; batch
``i`` of a simulation draws from ``Generator(PCG64(children[i]))`` where
``children = SeedSequence(seed).spawn(n_batches)``.  Results depend only on the
seed and the batch size, never on the number of worker threads.
"""
from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .bell import (
    CHSH,
    ConditionalBox,
    DomainError,
    HardyFrame,
    StructuralError,
    deterministic_box,
    hardy_frame_222,
    mdl_functional,
    sv_bounds,
    validate_box,
)
from .quantum import THETA_STAR, hardy_box

BATCH = 1 << 16
LOG2E = math.log2(math.e)
TOP_CELLS = 400


def max_threads() -> int:
    env = os.environ.get("HARDYAMP_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, os.cpu_count() or 1))


@dataclass(frozen=True)
class SVParams:
    eps: float
    bits_per_party: int = 1

    def __post_init__(self):
        if not 0 <= self.eps < 0.5:
            raise DomainError(f"eps must lie in [0, 1/2), got {self.eps}")
        if self.bits_per_party != 1:
            raise StructuralError("only binary inputs (one SV bit per party) are simulated")


def _streams(seed: int, n_batches: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(n_batches)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _batches(n: int) -> list[tuple[int, int]]:
    return [(s, min(n, s + BATCH)) for s in range(0, n, BATCH)]


def _adaptive_bits(m: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Bit t is 0 with probability 1/2 + eps if bit t-1 was 0, else 1/2 - eps."""
    u = rng.random(m)
    out = np.empty(m, dtype=np.uint8)
    prev = 0
    for t in range(m):
        p0 = 0.5 + eps if prev == 0 else 0.5 - eps
        prev = 0 if u[t] < p0 else 1
        out[t] = prev
    return out


def sample_sv_inputs(params: SVParams, n: int, mode: str = "iid", seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Input pairs ``(x, y)`` from an SV source; bits are drawn x_1, y_1, x_2, y_2, ...

    Modes: ``uniform`` (fair bits), ``iid`` (each bit 0 with probability
    1/2 + eps) and ``adaptive`` (bias toward repeating the previous bit).
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    if mode == "adaptive":
        rng = _streams(seed, 1)[0]
        bits = _adaptive_bits(2 * n, params.eps, rng)
        return bits[0::2].copy(), bits[1::2].copy()
    if mode not in ("uniform", "iid"):
        raise DomainError(f"unknown input mode {mode!r}")
    p0 = 0.5 if mode == "uniform" else 0.5 + params.eps
    parts = _batches(n)
    rngs = _streams(seed, max(1, len(parts)))
    xs = np.empty(n, dtype=np.uint8)
    ys = np.empty(n, dtype=np.uint8)
    for (s, e), rng in zip(parts, rngs):
        u = rng.random((e - s, 2))
        xs[s:e] = u[:, 0] >= p0
        ys[s:e] = u[:, 1] >= p0
    return xs, ys


def input_distribution(params: SVParams, mode: str) -> np.ndarray:
    """Stationary input-pair distribution ``nu[x, y]`` of a sampling mode."""
    if mode == "uniform":
        return np.full((2, 2), 0.25)
    if mode == "iid":
        q = np.array([0.5 + params.eps, 0.5 - params.eps])
        return np.outer(q, q)
    raise DomainError(f"no closed-form input distribution for mode {mode!r}")


# --- box sequence models ----------------------------------------------------

@dataclass
class BoxSequenceModel:
    """``kind`` is ``honest`` (theta, eta), ``box`` (fixed box), ``adversarial``
    (``program(i, history) -> box``) or ``replay`` (empirical conditionals from counts)."""

    kind: str
    theta: float = THETA_STAR
    eta: float = 0.0
    box: ConditionalBox | None = None
    program: Callable | None = None
    counts: np.ndarray | None = None

    def fixed_box(self) -> ConditionalBox | None:
        if self.kind == "honest":
            return hardy_box(self.theta, self.eta)
        if self.kind == "box":
            if self.box is None:
                raise DomainError("box model needs a box")
            _require_ns(self.box)
            return self.box
        if self.kind == "replay":
            c = np.asarray(self.counts, dtype=float)
            tot = c.sum(axis=(2, 3), keepdims=True)
            if np.any(tot <= 0):
                raise DomainError("replay counts need every setting observed")
            return ConditionalBox(CHSH, c / tot)
        if self.kind == "adversarial":
            if self.program is None:
                raise DomainError("adversarial model needs a program")
            return None
        raise DomainError(f"unknown model kind {self.kind!r}")


def _require_ns(box: ConditionalBox):
    rep = validate_box(box)
    if not rep.valid:
        raise DomainError(f"supplied box is not no-signaling: {rep.violations[0]}")


def best_deterministic_model(frame: HardyFrame, params: SVParams, mode: str = "iid") -> BoxSequenceModel:
    """Deterministic local box with the largest expected MDL indicator (ties: larger p_H)."""
    c = mdl_functional(frame, params.eps).coeff
    nu = input_distribution(params, mode)
    a_, b_, x_, y_ = frame.hardy_event
    best = None
    for alice in np.ndindex(*(2,) * 2):
        for bob in np.ndindex(*(2,) * 2):
            box = deterministic_box(CHSH, alice, bob)
            val = float(np.einsum("xy,xyab,xyab->", nu, c, box.p))
            key = (round(val, 15), box.p[x_, y_, a_, b_])
            if best is None or key > best[0]:
                best = (key, box)
    return BoxSequenceModel("box", box=best[1])


# --- transcripts ------------------------------------------------------------

@dataclass
class Transcript:
    n: int
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    seed: int
    eps: float
    Ln: float

    def records(self) -> np.ndarray:
        return np.stack([self.x, self.y, self.a, self.b], axis=1)

    def recompute_Ln(self, frame: HardyFrame | None = None) -> float:
        return mdl_average(self.x, self.y, self.a, self.b, self.eps, frame or hardy_frame_222())

    def counts(self) -> np.ndarray:
        c = np.zeros(CHSH.shape, dtype=np.int64)
        np.add.at(c, (self.x, self.y, self.a, self.b), 1)
        return c

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# seed={self.seed} eps={self.eps!r} n={self.n}\n")
        buf.write("x,y,a,b\n")
        np.savetxt(buf, self.records(), fmt="%d", delimiter=",")
        return buf.getvalue()


def mdl_average(x, y, a, b, eps: float, frame: HardyFrame) -> float:
    c = mdl_functional(frame, eps).coeff
    if len(x) == 0:
        return 0.0
    return float(c[x, y, a, b].mean())


def _sample_outcomes(box: ConditionalBox, x, y, rng) -> tuple[np.ndarray, np.ndarray]:
    sc = box.scenario
    cdf = np.cumsum(box.p.reshape(sc.nX, sc.nY, -1), axis=2)
    u = rng.random(len(x))
    k = (u[:, None] >= cdf[x, y]).sum(axis=1)
    k = np.minimum(k, sc.nA * sc.nB - 1)
    return (k // sc.nB).astype(np.uint8), (k % sc.nB).astype(np.uint8)


def run_protocol(model: BoxSequenceModel, params: SVParams, n: int, seed: int = 0, mode: str = "iid",
                 frame: HardyFrame | None = None, threads: int | None = None) -> Transcript:
    """Simulate ``n`` runs and return the transcript with its MDL average ``L_n``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    frame = frame or hardy_frame_222()
    master = np.random.SeedSequence(int(seed))
    input_seed, output_seed = (int(s.generate_state(1, dtype=np.uint64)[0]) for s in master.spawn(2))
    x, y = sample_sv_inputs(params, n, mode, input_seed)
    a = np.empty(n, dtype=np.uint8)
    b = np.empty(n, dtype=np.uint8)
    box = model.fixed_box()
    parts = _batches(n)
    rngs = _streams(output_seed, len(parts))
    if box is not None:
        def work(k):
            s, e = parts[k]
            a[s:e], b[s:e] = _sample_outcomes(box, x[s:e], y[s:e], rngs[k])

        workers = threads or max_threads()
        if workers > 1 and len(parts) > 1:
            with ThreadPoolExecutor(workers) as ex:
                list(ex.map(work, range(len(parts))))
        else:
            for k in range(len(parts)):
                work(k)
    else:
        for k, (s, e) in enumerate(parts):
            u = rngs[k].random(e - s)
            for i in range(s, e):
                bx = model.program(i, (x[:i], y[:i], a[:i], b[:i]))
                _require_ns(bx)
                flat = np.cumsum(bx.p[x[i], y[i]].ravel())
                j = min(int(np.searchsorted(flat, u[i - s], side="right")), 3)
                a[i], b[i] = divmod(j, 2)
    Ln = mdl_average(x, y, a, b, params.eps, frame)
    return Transcript(n, x, y, a, b, int(seed), params.eps, Ln)


# --- certification lemmas ---------------------------------------------------

def azuma_bound(n: int, delta_az: float) -> float:
    if n < 1:
        raise DomainError("n must be at least 1")
    if delta_az < 0:
        raise DomainError("deltaAz must be nonnegative")
    return 2.0 * math.exp(-n * delta_az**2 / 2)


@dataclass
class GoodRunCount:
    count: int
    bound: float


def good_run_count(values, kappa: float) -> GoodRunCount:
    """Exact number of runs with value >= kappa and the lemma's lower bound on it."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("empty sequence")
    if np.any(v > 1 / 16 + 1e-15):
        raise DomainError("per-run values above 1/16 violate the lemma's premise")
    avg = float(v.mean())
    if not 0 < kappa < 1 / 16:
        raise DomainError(f"kappa must lie in (0, 1/16), got {kappa}")
    bound = (avg - kappa) / (1 / 16 - kappa) * v.size
    return GoodRunCount(int(np.sum(v >= kappa)), bound)


def min_entropy_product(gamma: float, mu: float, n: float) -> float:
    """Bits certified by ``P <= gamma^(mu n)``: ``mu n log2(1/gamma)``."""
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    if not 0 < mu <= 1:
        raise DomainError(f"mu must lie in (0, 1], got {mu}")
    return mu * n * -math.log2(gamma)


def good_fraction(delta_exp, delta_az, kappa):
    return (delta_exp - delta_az - kappa) / (1 / 16 - kappa)


def output_cap(kappa, eps):
    return 1 - kappa / (2 * (0.25 - eps**2) ** 2)


def entropy_objective(delta_exp, delta_az, kappa, eps, n):
    """F(delta_exp, delta_Az, kappa): certified bits for one choice of the slack parameters."""
    mu = good_fraction(delta_exp, delta_az, kappa)
    gamma = output_cap(kappa, eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = -mu * np.log2(gamma)
    second = LOG2E * np.asarray(delta_az) ** 2 / 4
    return n / 4 * np.minimum(first, second) - 0.75


@dataclass
class HBound:
    h: float
    delta_az: float
    kappa: float
    abort: bool = False


def h_bound(delta_exp: float, eps: float, n: float, grid: int = 200, levels: int = 3) -> HBound:
    """Maximise F over ``0 < delta_Az < delta_exp``, ``0 < kappa < delta_exp - delta_Az``.

    Coordinates ``t = delta_Az / delta_exp`` and ``s = kappa / (delta_exp - delta_Az)``
    map the domain to the open unit square.  Each level evaluates a ``grid x grid``
    lattice of cell midpoints and zooms to the bounding box of the ``TOP_CELLS``
    best cells, padded by one cell.
    """
    if not delta_exp > 0:
        return HBound(0.0, 0.0, 0.0, abort=True)
    lo_t, hi_t, lo_s, hi_s = 0.0, 1.0, 0.0, 1.0
    best = (-np.inf, 0.0, 0.0)
    for _ in range(levels):
        t = lo_t + (np.arange(grid) + 0.5) * (hi_t - lo_t) / grid
        s = lo_s + (np.arange(grid) + 0.5) * (hi_s - lo_s) / grid
        T, S = np.meshgrid(t, s, indexing="ij")
        daz = T * delta_exp
        kap = S * (delta_exp - daz)
        F = entropy_objective(delta_exp, daz, kap, eps, n)
        F = np.where(np.isfinite(F), F, -np.inf)
        i, j = np.unravel_index(np.argmax(F), F.shape)
        if F[i, j] > best[0]:
            best = (float(F[i, j]), float(daz[i, j]), float(kap[i, j]))
        # zoom to the bounding box of the best cells: the optimum lies on a thin
        # ridge where the two branches of F cross, so a box around one point can miss it
        cut = np.partition(F.ravel(), -TOP_CELLS)[-TOP_CELLS]
        ii, jj = np.nonzero(F >= cut)
        dt, ds = (hi_t - lo_t) / grid, (hi_s - lo_s) / grid
        lo_t, hi_t = max(0.0, t[ii.min()] - dt), min(1.0, t[ii.max()] + dt)
        lo_s, hi_s = max(0.0, s[jj.min()] - ds), min(1.0, s[jj.max()] + ds)
    h, daz, kap = best
    if h <= 0:
        return HBound(0.0, daz, kap)
    return HBound(h, daz, kap)


def delta_exp_from_counts(counts, eps: float, frame: HardyFrame | None = None) -> float:
    """MDL value of observed frequencies: Hardy frequency times (1/2-eps)^2 minus zero-set frequencies times (1/2+eps)^2."""
    c = np.asarray(getattr(counts, "counts", counts), dtype=float)
    frame = frame or hardy_frame_222()
    if c.shape != frame.scenario.shape:
        raise StructuralError(f"count table shape {c.shape} does not match the frame")
    tot = c.sum()
    if tot <= 0:
        raise DomainError("count table is empty")
    return float(np.sum(mdl_functional(frame, eps).coeff * c) / tot)


def bh_from_mdl(bsv: float, eps: float, bits: int = 2) -> float:
    """Lower bound on ``B_H`` from an MDL value: ``bsv / (p_min p_max)``."""
    lo, hi = sv_bounds(eps, bits)
    return bsv / (lo * hi)


@dataclass
class EntropyCertificate:
    deltaExp: float
    eps: float
    n: float
    deltaAz: float
    kappa: float
    mu: float
    gamma: float
    hBound: float
    accepted: bool
    failureProb: float
    method: str = "grid"
    abort: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EntropyCertificate":
        return cls(**json.loads(text))


def certify(delta_exp: float, eps: float, n: float, method: str = "grid",
            grid: int = 200, levels: int = 3) -> EntropyCertificate:
    """Certificate for an observed MDL value.

    ``grid`` optimises (delta_Az, kappa) by grid search; ``fixed`` uses
    delta_Az = delta/2 and kappa = delta/4.
    """
    if method == "grid":
        hb = h_bound(delta_exp, eps, n, grid, levels)
        daz, kap, h, abort = hb.delta_az, hb.kappa, hb.h, hb.abort
    elif method == "fixed":
        abort = not delta_exp > 0
        daz, kap = delta_exp / 2, delta_exp / 4
        h = 0.0 if abort else max(0.0, float(entropy_objective(delta_exp, daz, kap, eps, n)))
    else:
        raise DomainError(f"unknown certification method {method!r}")
    mu = good_fraction(delta_exp, daz, kap) if not abort else 0.0
    gamma = output_cap(kap, eps) if not abort else 1.0
    fail = azuma_bound(int(n), daz) if daz > 0 else 2.0
    return EntropyCertificate(
        deltaExp=float(delta_exp), eps=float(eps), n=float(n), deltaAz=float(daz), kappa=float(kap),
        mu=float(mu), gamma=float(gamma), hBound=float(h), accepted=bool(h > 0 and not abort),
        failureProb=float(fail), method=method, abort=bool(abort),
    )
