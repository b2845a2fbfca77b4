"""01-gadgets, basis completion and their compilation into two-party Hardy games.

Vertex ids are 0-based positions in the vector list.  A game's inputs are the
maximum cliques (complete bases) sorted lexicographically; the outcome label of
a vertex within an input is its position in the sorted clique tuple.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .bell import BellFunctional, BellScenario, CapacityError, DomainError, HardyFrame, StructuralError

MAX_COLORING_VERTICES = 40
MAX_GAME_VERTICES = 400
ANGLE_TOL = 1e-9
GS_TOL = 1e-10


def _as_vectors(vectors) -> np.ndarray:
    arr = np.asarray(vectors)
    if arr.ndim != 2:
        raise StructuralError("vectors must be a 2-d array")
    if np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int64)
    arr = arr.astype(float)
    if np.all(arr == np.round(arr)) and np.max(np.abs(arr), initial=0) < 2**31:
        return arr.astype(np.int64)
    return arr


def _exact(vecs: np.ndarray) -> bool:
    return np.issubdtype(vecs.dtype, np.integer)


def is_orthogonal(u, v) -> bool:
    u, v = np.asarray(u), np.asarray(v)
    if np.issubdtype(u.dtype, np.integer) and np.issubdtype(v.dtype, np.integer):
        return int(u @ v) == 0
    return abs(float(u @ v)) <= ANGLE_TOL * np.linalg.norm(u) * np.linalg.norm(v)


def same_ray(u, v) -> bool:
    """True iff ``u`` and ``v`` span the same line (exact 2x2 minors for integer vectors)."""
    u, v = np.asarray(u), np.asarray(v)
    if np.issubdtype(u.dtype, np.integer) and np.issubdtype(v.dtype, np.integer):
        return all(int(u[i]) * int(v[j]) == int(u[j]) * int(v[i]) for i, j in itertools.combinations(range(u.size), 2))
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    cos = abs(float(u @ v)) / (nu * nv)
    return np.sqrt(max(0.0, 1 - cos * cos)) < ANGLE_TOL


def primitive(v) -> np.ndarray:
    """Integer vector divided by the gcd of its entries, first nonzero entry made positive."""
    v = np.asarray(v, dtype=np.int64)
    g = np.gcd.reduce(np.abs(v))
    if g == 0:
        raise DomainError("zero vector")
    v = v // g
    nz = v[np.flatnonzero(v)[0]]
    return v if nz > 0 else -v


def orthogonality_graph(vecs: np.ndarray) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(len(vecs)))
    for i, j in itertools.combinations(range(len(vecs)), 2):
        if is_orthogonal(vecs[i], vecs[j]):
            g.add_edge(i, j)
    return g


@dataclass
class Gadget:
    dim: int
    vectors: np.ndarray
    distinguished: tuple
    labels: list = field(default_factory=list)
    allow_identical: bool = False

    def __post_init__(self):
        self.vectors = _as_vectors(self.vectors)
        if self.vectors.shape[1] != self.dim:
            raise StructuralError(f"vectors have length {self.vectors.shape[1]}, dimension is {self.dim}")
        if np.any(np.all(self.vectors == 0, axis=1)):
            raise DomainError("zero vector in representation")
        i, j = (int(v) for v in self.distinguished)
        self.distinguished = (i, j)
        if not (0 <= i < len(self.vectors) and 0 <= j < len(self.vectors)):
            raise StructuralError(f"distinguished ids {self.distinguished} out of range")
        if i == j and not self.allow_identical:
            raise StructuralError("distinguished vertices must be distinct")
        if is_orthogonal(self.vectors[i], self.vectors[j]):
            raise StructuralError(f"distinguished vertices {i} and {j} are adjacent (orthogonal)")
        for a, b in itertools.combinations(range(len(self.vectors)), 2):
            if same_ray(self.vectors[a], self.vectors[b]):
                raise StructuralError(f"vertices {a} and {b} represent the same ray")
        if not self.labels:
            self.labels = [f"u{k + 1}" for k in range(len(self.vectors))]

    @property
    def n(self) -> int:
        return len(self.vectors)

    def graph(self) -> nx.Graph:
        return orthogonality_graph(self.vectors)

    def to_dict(self) -> dict:
        vec = self.vectors.tolist()
        return {"dim": self.dim, "vectors": vec, "distinguished": list(self.distinguished), "labels": self.labels}

    @classmethod
    def from_dict(cls, d: dict) -> "Gadget":
        return cls(int(d["dim"]), d["vectors"], tuple(d["distinguished"]), list(d.get("labels", [])))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Gadget":
        return cls.from_dict(json.loads(Path(path).read_text()))


def clifton_gadget() -> Gadget:
    """The 8-vertex Clifton gadget in dimension 3, distinguished pair (u1, u8).

    Vectors u3, u5 and u7 are chosen so that the orthogonalities are exactly the
    Clifton edges; see the decisions ledger for the deviation from the printed list.
    """
    vecs = [(-1, 1, 1), (1, 1, 0), (1, 0, 1), (0, 0, 1), (0, 1, 0), (1, -1, 0), (1, 0, -1), (1, 1, 1)]
    return Gadget(3, np.array(vecs), (0, 7))


# --- coloring enumeration ---------------------------------------------------

@dataclass
class GadgetVerdict:
    is_gadget: bool
    colorings: int
    first_one: int  # colorings with f(v1) = 1
    second_one: int  # colorings with f(v2) = 1
    both_one: int

    @property
    def nontrivial(self) -> bool:
        return self.first_one > 0 and self.second_one > 0


def enumerate_colorings(vecs: np.ndarray, dim: int, require_basis: bool = True):
    """Yield every {0,1}-coloring as a tuple of ints.

    Rules: no two orthogonal vertices both 1; with ``require_basis`` every
    clique of size ``dim`` carries exactly one 1.
    """
    n = len(vecs)
    if n > MAX_COLORING_VERTICES:
        raise CapacityError(f"{n} vertices exceed the coloring guard of {MAX_COLORING_VERTICES}")
    g = orthogonality_graph(vecs)
    bases = [tuple(sorted(c)) for c in nx.find_cliques(g) if len(c) == dim] if require_basis else []
    nbrs = [set(g[v]) for v in range(n)]
    bases_of = [[b for b in bases if v in b] for v in range(n)]
    f = [-1] * n

    def consistent(v):
        if f[v] == 1 and any(f[u] == 1 for u in nbrs[v]):
            return False
        for b in bases_of[v]:
            vals = [f[u] for u in b]
            if vals.count(1) > 1:
                return False
            if -1 not in vals and vals.count(1) != 1:
                return False
        return True

    def rec(v):
        if v == n:
            yield tuple(f)
            return
        for val in (0, 1):
            f[v] = val
            if consistent(v):
                yield from rec(v + 1)
        f[v] = -1

    yield from rec(0)


def verify_gadget(g: Gadget, require_basis: bool = True, complete: bool = True) -> GadgetVerdict:
    """Exhaustive check of the 01-gadget property (optionally after completing bases)."""
    vecs = complete_bases(g).vectors if complete else g.vectors
    i, j = g.distinguished
    total = first = second = both = 0
    for f in enumerate_colorings(vecs, g.dim, require_basis):
        total += 1
        first += f[i]
        second += f[j]
        both += f[i] & f[j]
    return GadgetVerdict(both == 0, total, first, second, both)


# --- basis completion and games ---------------------------------------------

def _gram_schmidt_complete(vs: np.ndarray, dim: int) -> list[np.ndarray]:
    """Orthonormal vectors completing the span of ``vs`` (modified Gram-Schmidt, two passes)."""
    basis = [v / np.linalg.norm(v) for v in np.asarray(vs, dtype=float)]
    out = []
    for e in np.eye(dim):
        w = e.copy()
        for _ in range(2):
            for q in basis + out:
                w -= (q @ w) * q
        nrm = np.linalg.norm(w)
        if nrm > 1e-6:
            out.append(w / nrm)
        if len(basis) + len(out) == dim:
            break
    if len(basis) + len(out) != dim:
        raise DomainError("degenerate completion")
    return out


def _completion(vs: np.ndarray, dim: int) -> list[np.ndarray]:
    if dim == 3:
        if len(vs) != 2:
            raise DomainError(f"cannot complete a {len(vs)}-clique uniquely in dimension 3")
        w = np.cross(vs[0], vs[1])
        if _exact(vs):
            return [primitive(w)]
        if np.linalg.norm(w) < GS_TOL:
            raise DomainError("numerically degenerate completion")
        return [w / np.linalg.norm(w)]
    if dim == 4:
        new = _gram_schmidt_complete(vs, dim)
        out = []
        for w in new:
            r = np.round(w * np.max(np.abs(w)) ** -1, 12)
            if np.all(np.abs(r - np.round(r)) < 1e-12):
                out.append(primitive(np.round(r).astype(np.int64)))
            else:
                out.append(w)
        return out
    raise DomainError(f"basis completion supports dimensions 3 and 4, got {dim}")


def _add_vertex(vecs: list, w) -> int:
    for k, v in enumerate(vecs):
        if same_ray(v, w):
            return k
    vecs.append(w)
    return len(vecs) - 1


@dataclass
class GadgetGame:
    dim: int
    vectors: np.ndarray
    cliques: list  # sorted vertex-id tuples; input x is cliques[x]
    hardy_events: list  # [((x, a), (y, b)), ...]
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.vectors = _as_vectors(self.vectors)
        self.cliques = [tuple(int(v) for v in c) for c in self.cliques]
        for c in self.cliques:
            if len(c) != self.dim:
                raise StructuralError(f"clique {c} does not have size {self.dim}")
            for u, v in itertools.combinations(c, 2):
                if not is_orthogonal(self.vectors[u], self.vectors[v]):
                    raise StructuralError(f"clique {c} is not mutually orthogonal")
        covered = set(itertools.chain.from_iterable(self.cliques))
        missing = set(range(len(self.vectors))) - covered
        if missing:
            raise StructuralError(f"vertices {sorted(missing)} lie in no clique")
        self._orth = {(u, v) for u, v in itertools.permutations(range(len(self.vectors)), 2)
                      if is_orthogonal(self.vectors[u], self.vectors[v])}
        if not self.labels:
            self.labels = [f"u{k + 1}" for k in range(len(self.vectors))]

    @property
    def scenario(self) -> BellScenario:
        return BellScenario(len(self.cliques), len(self.cliques), self.dim, self.dim)

    def orthogonal(self, u: int, v: int) -> bool:
        return (u, v) in self._orth

    def vertex(self, x: int, a: int) -> int:
        return self.cliques[x][a]

    def zero_pairs(self) -> list:
        """Pairs ``((x, a), (y, b))`` with orthogonal vertices (the zero constraints)."""
        hard = set(self.hardy_events)
        out = []
        for x, y in itertools.product(range(len(self.cliques)), repeat=2):
            for a, b in itertools.product(range(self.dim), repeat=2):
                ev = ((x, a), (y, b))
                if ev not in hard and self.orthogonal(self.cliques[x][a], self.cliques[y][b]):
                    out.append(ev)
        return out

    def to_frame(self, which: int = 0) -> HardyFrame:
        """Hardy frame of the game (zero set plus the ``which``-th distinguished event)."""
        zs = tuple((a, b, x, y) for (x, a), (y, b) in self.zero_pairs())
        (x, a), (y, b) = self.hardy_events[which]
        return HardyFrame(self.scenario, zs, (a, b, x, y))

    def sb_indicator(self) -> BellFunctional:
        """Indicator of S_B: every zero pair plus the distinguished events."""
        c = np.zeros(self.scenario.shape)
        for (x, a), (y, b) in self.zero_pairs() + list(self.hardy_events):
            c[x, y, a, b] = 1.0
        return BellFunctional(self.scenario, c, apply_to_joint=False)

    def hardy_probability(self, box) -> float:
        return float(sum(box.p[x, y, a, b] for (x, a), (y, b) in self.hardy_events))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "vectors": self.vectors.tolist(),
            "cliques": [list(c) for c in self.cliques],
            "hardyEvents": [[list(e[0]), list(e[1])] for e in self.hardy_events],
            "labels": self.labels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GadgetGame":
        ev = [(tuple(e[0]), tuple(e[1])) for e in d["hardyEvents"]]
        return cls(int(d["dim"]), d["vectors"], d["cliques"], ev, list(d.get("labels", [])))


def _hardy_inputs(cliques, v1, v2, x_star=None, y_star=None):
    xs = [k for k, c in enumerate(cliques) if v1 in c]
    ys = [k for k, c in enumerate(cliques) if v2 in c]
    if not xs or not ys:
        raise StructuralError("distinguished vertex lies in no complete basis")
    x = xs[0] if x_star is None else x_star
    y = ys[-1] if y_star is None else y_star
    if v1 not in cliques[x] or v2 not in cliques[y]:
        raise StructuralError("chosen Hardy inputs do not contain the distinguished vertices")
    return x, y


def complete_bases(g: Gadget, x_star: int | None = None, y_star: int | None = None,
                   max_vertices: int = MAX_GAME_VERTICES) -> GadgetGame:
    """Complete every partial basis and compile the gadget into a game.

    New vertices are numbered in order of creation, processing partial cliques
    in lexicographic order.  The Hardy inputs default to the first clique
    containing v1 (Alice) and the last clique containing v2 (Bob).
    """
    if g.dim not in (3, 4):
        raise DomainError(f"basis completion supports dimensions 3 and 4, got {g.dim}")
    vecs = list(g.vectors)
    while True:
        graph = orthogonality_graph(np.array(vecs))
        partial = sorted(tuple(sorted(c)) for c in nx.find_cliques(graph) if len(c) < g.dim)
        lonely = [c for c in partial if len(c) == 1]
        if lonely:
            raise DomainError(f"vertex {lonely[0][0]} is orthogonal to nothing; its completion is not unique")
        if not partial:
            break
        before = len(vecs)
        for c in partial:
            for w in _completion(np.array([vecs[k] for k in c]), g.dim):
                _add_vertex(vecs, w)
        if len(vecs) == before:
            raise DomainError("completion produced no new vertices but cliques remain partial")
        if len(vecs) > max_vertices:
            raise CapacityError(f"completion exceeded {max_vertices} vertices")
    arr = _as_vectors(np.array(vecs)) if all(_exact(np.asarray(v)[None]) for v in vecs) else np.array(vecs, float)
    cliques = sorted(tuple(sorted(c)) for c in nx.find_cliques(orthogonality_graph(arr)) if len(c) == g.dim)
    v1, v2 = g.distinguished
    x, y = _hardy_inputs(cliques, v1, v2, x_star, y_star)
    events = [((x, cliques[x].index(v1)), (y, cliques[y].index(v2)))]
    labels = list(g.labels) + [f"u{k + 1}" for k in range(g.n, len(arr))]
    return GadgetGame(g.dim, arr, cliques, events, labels)


def quaternion_copies(v) -> np.ndarray:
    """Rows of the real orthogonal matrix left-multiplying by 1, i, j, k."""
    v = np.asarray(v)
    if v.shape != (4,):
        raise StructuralError("quaternion copies need a 4-vector")
    if not np.any(v):
        raise DomainError("zero vector")
    a, b, c, d = v
    return np.array([[a, b, c, d], [b, -a, d, -c], [c, -d, -a, b], [d, c, -b, -a]])


def four_copy_game(g: Gadget, complete: bool = True, check: bool = True) -> GadgetGame:
    """Four mutually orthogonal copies of a 3-d gadget embedded in dimension 4.

    Hardy inputs are the cliques formed by the four copies of each distinguished
    vertex; the four copy-wise pairs are the distinguished events.  ``check=False``
    skips the gadget verification (used for identical distinguished vectors).
    """
    if g.dim != 3:
        raise DomainError("the four-copy construction starts from a 3-d gadget")
    if check and not verify_gadget(g).is_gadget:
        raise DomainError("input graph is not a 01-gadget")
    base = complete_bases(g).vectors if complete else g.vectors
    emb = np.hstack([base, np.zeros((len(base), 1), dtype=base.dtype)])
    extra = np.zeros((1, 4), dtype=base.dtype)
    extra[0, 3] = 1
    emb = np.vstack([emb, extra])
    if 4 * len(emb) > MAX_GAME_VERTICES:
        raise CapacityError(f"{4 * len(emb)} copy vertices exceed {MAX_GAME_VERTICES}")
    vecs: list = []
    copy_id = np.empty((len(emb), 4), dtype=int)
    for i, v in enumerate(emb):
        for k, w in enumerate(quaternion_copies(v)):
            copy_id[i, k] = _add_vertex(vecs, w)
    arr = _as_vectors(np.array(vecs))
    cliques = sorted(tuple(sorted(c)) for c in nx.find_cliques(orthogonality_graph(arr)) if len(c) == 4)
    v1, v2 = g.distinguished
    cx = tuple(sorted(copy_id[v1]))
    cy = tuple(sorted(copy_id[v2]))
    x, y = cliques.index(cx), cliques.index(cy)
    events = [((x, cx.index(copy_id[v1, k])), (y, cy.index(copy_id[v2, k]))) for k in range(4)]
    labels = [f"v{k + 1}" for k in range(len(arr))]
    return GadgetGame(4, arr, cliques, events, labels)
