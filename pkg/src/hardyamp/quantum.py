"""Boxes from pure states and projective measurements."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bell import CHSH, BellScenario, ConditionalBox, DomainError, StructuralError

THETA_STAR = float(np.arccos(np.sqrt((np.sqrt(5) - 1) / 2)))
P_STAR = (5 * np.sqrt(5) - 11) / 2


def _complex_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).ravel()]


def _from_complex_json(rows) -> np.ndarray:
    return np.array([complex(re, im) for re, im in rows])


@dataclass(frozen=True, eq=False)
class StateVector:
    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        if amp.size != self.dim:
            raise StructuralError(f"{amp.size} amplitudes for dimension {self.dim}")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1) > 1e-12:
            raise DomainError(f"state norm^2 is {norm}, expected 1")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "amplitudes": _complex_json(self.amplitudes)})

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        d = json.loads(text)
        return cls(int(d["dim"]), _from_complex_json(d["amplitudes"]))


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Projective measurement; outcome ``k`` is ``vectors[k]``."""

    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.shape != (self.dim, self.dim):
            raise StructuralError(f"basis needs {self.dim} vectors of length {self.dim}, got {v.shape}")
        gram = v.conj() @ v.T
        if np.max(np.abs(gram - np.eye(self.dim))) > 1e-10:
            raise DomainError("basis vectors are not orthonormal")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "vectors": [_complex_json(r) for r in self.vectors]})

    @classmethod
    def from_json(cls, text: str) -> "MeasurementBasis":
        d = json.loads(text)
        return cls(int(d["dim"]), np.array([_from_complex_json(r) for r in d["vectors"]]))


@dataclass(frozen=True)
class NoisyState:
    theta: float
    eta: float

    def __post_init__(self):
        if not 0 <= self.eta < 1:
            raise DomainError(f"eta must lie in [0, 1), got {self.eta}")
        _check_theta(self.theta)


def _check_theta(theta):
    if not 0 < theta < np.pi / 2:
        raise DomainError(f"theta must lie strictly between 0 and pi/2, got {theta}")


def hardy_state(theta: float) -> StateVector:
    """``[cos t (|01> + |10>) + sin t |11>] / sqrt(1 + cos^2 t)`` in the order |00>,|01>,|10>,|11>."""
    _check_theta(theta)
    c, s = np.cos(theta), np.sin(theta)
    amp = np.array([0.0, c, c, s]) / np.sqrt(1 + c * c)
    return StateVector(4, amp)


def hardy_bases(theta: float) -> list[MeasurementBasis]:
    """Local bases for inputs 0 and 1 (same on both sides).

    Input 0: outcome 0 is ``sin t|0> - cos t|1>``, outcome 1 is ``cos t|0> + sin t|1>``.
    Input 1: the computational basis.  With this labelling the Hardy zeros
    sit at (0,1|0,1), (1,0|1,0), (0,0|1,1) and the Hardy event is (0,0|0,0).
    """
    _check_theta(theta)
    c, s = np.cos(theta), np.sin(theta)
    return [MeasurementBasis(2, [[s, -c], [c, s]]), MeasurementBasis(2, np.eye(2))]


def box_from_state(state: StateVector, alice: list[MeasurementBasis], bob: list[MeasurementBasis],
                   eta: float = 0.0) -> ConditionalBox:
    """``P(a,b|x,y) = (1 - eta) |<alpha_xa (x) beta_yb|psi>|^2 + eta / (dA dB)``."""
    if not 0 <= eta < 1:
        raise DomainError(f"eta must lie in [0, 1), got {eta}")
    dA, dB = alice[0].dim, bob[0].dim
    if dA * dB != state.dim:
        raise StructuralError(f"local dimensions {dA}x{dB} do not match state dimension {state.dim}")
    psi = state.amplitudes.reshape(dA, dB)
    sc = BellScenario(len(alice), len(bob), dA, dB)
    p = np.empty(sc.shape)
    for x, A in enumerate(alice):
        for y, B in enumerate(bob):
            amp = A.vectors.conj() @ psi @ B.vectors.conj().T  # [a, b]
            p[x, y] = np.abs(amp) ** 2
    if eta:
        p = (1 - eta) * p + eta / (dA * dB)
    return ConditionalBox(sc, p)


def hardy_box(theta: float = THETA_STAR, eta: float = 0.0) -> ConditionalBox:
    bases = hardy_bases(theta)
    box = box_from_state(hardy_state(theta), bases, bases, eta)
    assert box.scenario == CHSH
    return box


def noise_tolerance(eps: float, p_q: float = P_STAR) -> float:
    """Largest isotropic noise weight for which the noisy Hardy box keeps a positive MDL value."""
    if not 0 <= eps < 0.5:
        raise DomainError(f"eps must lie in [0, 1/2), got {eps}")
    ratio = ((0.5 + eps) / (0.5 - eps)) ** 4
    return p_q / (0.75 * ratio - (0.25 - p_q))


def noisy_mdl_lower_bound(eps: float, eta: float, p_q: float = P_STAR) -> float:
    """Worst-case MDL value of the optimal Hardy box mixed with weight ``eta`` of white noise."""
    lo = (0.5 - eps) ** 4
    ratio = ((0.5 + eps) / (0.5 - eps)) ** 4
    return lo * (p_q * (1 - eta) - 0.75 * eta * ratio + 0.25 * eta)


def mes_box(game) -> ConditionalBox:
    """Box of the maximally entangled state for a compiled gadget game.

    ``P(a,b|x,y) = |sum_i u_i v_i|^2 / d`` with ``u``, ``v`` the normalised
    vectors of Alice's outcome ``a`` on clique ``x`` and Bob's ``b`` on ``y``.
    """
    d = game.dim
    vecs = np.asarray(game.vectors, dtype=complex)
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    for i, cl in enumerate(game.cliques):
        V = vecs[list(cl)]
        if V.shape[0] != d or np.max(np.abs(V.conj() @ V.T - np.eye(d))) > 1e-10:
            raise DomainError(f"clique {i} {tuple(cl)} is not an orthonormal basis")
    C = np.array(game.cliques)
    overlap = vecs @ vecs.T  # bilinear, no conjugation: <u| v-bar>
    p = np.abs(overlap[C[:, None, :, None], C[None, :, None, :]]) ** 2 / d
    return ConditionalBox(game.scenario, p)
