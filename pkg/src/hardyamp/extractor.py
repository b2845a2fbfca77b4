"""Raz extractor parameter accounting and a runnable one-bit inner-product extractor.

Everything is in bits (log base 2).  Tiny probabilities are carried as log2
values so that ``2^-4000``-sized terms do not underflow.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from .bell import DomainError, StructuralError
from .protocol import certify, h_bound

EPS_CHSH = 1 / math.sqrt(2) - 0.5
LOG2E = math.log2(math.e)


def delta_raz(eps: float, n: float) -> float:
    """Raz margin ``-log2(1/2 + eps) - 1/2 - 4 log2(n) / n``."""
    return -math.log2(0.5 + eps) - 0.5 - 4 * math.log2(n) / n


@dataclass
class ExtractorParams:
    nSV: float
    n: float
    eps: float
    hSV: float
    hBox: float
    deltaRaz: float
    mRaz: int
    constraints: dict
    status: str
    threshold3R: float  # exact (3R) right-hand side 5 log2(nSV - hSV)
    sufficient3R: float  # the cruder 5 log2(nSV), independent of eps
    t: float | None = None
    kReal: float | None = None
    kFloor: int | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def raz_check(n: float, eps: float, hBox: float, nSV: float | None = None) -> ExtractorParams:
    """Evaluate Raz's constraints (1R)-(4R) for ``n`` runs and ``nSV`` source bits."""
    if hBox < 0:
        raise DomainError("hBox must be nonnegative")
    if not 0 <= eps < 0.5:
        raise DomainError(f"eps must lie in [0, 1/2), got {eps}")
    nSV = n if nSV is None else nSV
    hSV = -nSV * math.log2(0.5 + eps)
    dR = delta_raz(eps, n)
    gap = nSV - hSV
    thr3 = 5 * math.log2(gap) if gap > 0 else -math.inf
    mRaz = math.floor(dR * hBox / 40) - 1
    cons = {
        "1R": nSV >= 6 * math.log2(nSV) + 2 * math.log2(n),
        "2R": dR > 0,
        "3R": hBox >= thr3,
        "4R": mRaz >= 1,
    }
    status = "feasible" if all(cons.values()) else "infeasible"
    return ExtractorParams(nSV, n, eps, hSV, hBox, dR, mRaz, cons, status, thr3, 5 * math.log2(nSV))


@dataclass
class KBits:
    raw: float  # before clamping; shifts by exactly -1/2 per unit of t
    kReal: float
    kFloor: int
    hBound: float
    deltaRaz: float


def k_from_h(h: float, eps: float, n: float, t: float) -> KBits:
    dR = delta_raz(eps, n)
    raw = (3 / 80 * dR * h - (t + 3)) / 2
    k = max(0.0, raw)
    return KBits(raw, k, math.floor(k), h, dR)


def k_bits(delta_exp: float, eps: float, n: float, t: float, grid: int = 200, levels: int = 3) -> KBits:
    """Final output length ``k = ((3/80) deltaRaz hBound - (t + 3)) / 2``, clamped at 0."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return k_from_h(h_bound(delta_exp, eps, n, grid, levels).h, eps, n, t)


@dataclass
class SecurityReport:
    log2FailureProb: float
    log2Dist: float
    log2Delta: float
    k: float
    t: float | None
    conditionHolds: bool | None
    notes: dict = field(default_factory=lambda: {
        "z": "fresh SV bits fed to the extractor (nSV of them)",
        "e": "adversary's classical side information",
        "w": "adversary's input to the no-signaling box",
        "o": "adversary's output from the no-signaling box",
    })

    @property
    def failureProb(self) -> float:
        return 2.0**self.log2FailureProb

    @property
    def dist(self) -> float:
        return 2.0**self.log2Dist

    @property
    def Delta(self) -> float:
        return 2.0**self.log2Delta

    @property
    def dComp(self) -> float:
        return self.Delta

    def per_output_bound(self) -> float:
        """Upper bound ``(1 + Delta) / 2^k`` on each output string's probability."""
        return (1 + self.Delta) / 2.0**self.k

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(failureProb=self.failureProb, dist=self.dist, Delta=self.Delta, dComp=self.dComp)
        return d


def security_slack(mRaz: int, gamma: float, mu: float, n: float, deltaAz: float, k: float,
                   t: float | None = None) -> SecurityReport:
    """Distribution slack ``Delta = (2^(-1.5 m) + 2 (gamma^(mu n) + 2 eps_Az)^(1/4)) 2^k``."""
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    log_gmn = mu * n * math.log2(gamma) if gamma < 1 else 0.0
    log_eaz = 1 - n * deltaAz**2 / 4 * LOG2E  # log2 of 2 exp(-n dAz^2 / 4)
    log_bad = float(np.logaddexp2(log_gmn, 1 + log_eaz)) / 4
    log_dist = float(np.logaddexp2(-1.5 * mRaz, 1 + log_bad))
    log_delta = log_dist + k
    cond = None if t is None else bool(log_delta <= -t)
    return SecurityReport(log_bad, log_dist, log_delta, k, t, cond)


@dataclass
class Pipeline:
    certificate: object
    raz: ExtractorParams
    k: KBits
    security: SecurityReport


def pipeline(delta_exp: float, eps: float, n: float, t: float, grid: int = 200, levels: int = 3) -> Pipeline:
    """Observed MDL value to certified bits: h_bound, Raz constraints, k and Delta."""
    cert = certify(delta_exp, eps, n, "grid", grid, levels)
    raz = raz_check(n, eps, cert.hBound)
    kb = k_from_h(cert.hBound, eps, n, t)
    raz.t, raz.kReal, raz.kFloor = t, kb.kReal, kb.kFloor
    sec = security_slack(raz.mRaz, cert.gamma, cert.mu, n, cert.deltaAz, kb.kFloor, t)
    return Pipeline(cert, raz, kb, sec)


# --- runnable extractor -----------------------------------------------------

class Extractor(Protocol):
    output_bits: int

    def extract(self, x_bits, y_bits) -> np.ndarray: ...


def cg_extract(x_bits, y_bits) -> int:
    """Inner product mod 2 of two equal-length bit strings."""
    x = np.asarray(x_bits, dtype=np.uint8)
    y = np.asarray(y_bits, dtype=np.uint8)
    if x.shape != y.shape:
        raise StructuralError(f"length mismatch: {x.shape} vs {y.shape}")
    return int(np.bitwise_and(x, y).sum() & 1)


@dataclass
class InnerProductExtractor:
    """One-bit two-source extractor; demonstration only (k = 1)."""

    output_bits: int = 1

    def extract(self, x_bits, y_bits) -> np.ndarray:
        return np.array([cg_extract(x_bits, y_bits)], dtype=np.uint8)


def _parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    shift = 32
    while shift:
        v ^= v >> shift
        shift //= 2
    return v & 1


def exhaustive_bias(length: int) -> float:
    """``|P(0) - P(1)|`` of the inner product over all pairs of ``length``-bit strings."""
    if not 1 <= length <= 14:
        raise DomainError("exhaustive enumeration supports lengths 1..14")
    size = 1 << length
    y = np.arange(size, dtype=np.uint64)
    ones = 0
    for x in range(size):
        ones += int(_parity(y & np.uint64(x)).sum())
    total = size * size
    return abs(total - 2 * ones) / total
