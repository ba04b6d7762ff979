"""Hypergraph states, their stabilizers, and the adaptive test data.

A hypergraph state is built from |+>^n by applying, for every hyperedge, a
phase flip on the basis states whose edge qubits are all 1.  Conjugating X on
vertex v through those diagonal gates yields the v-th stabilizer

    g_v = X_v * prod(Z over 2-edge neighbors) * prod(multi-controlled Z's),

and expanding each multi-controlled Z over computational projectors on all
but its highest-index vertex gives the branch form used by the adaptive
single-shot test: for each projector-bit assignment ``a`` the residual
operator is a signed product of X_v and plain Z's, obtained here by literal
symbolic multiplication (Z's cancel pairwise; a Z landing on a projector
vertex turns into the sign (-1)**a of that vertex).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .paulis import (
    CapExceededError,
    DENSE_QUBIT_CAP,
    PURE_QUBIT_CAP,
    bit_for_qubit,
    sign_vector,
)
from .states import DenseState, pure_state


@dataclass(frozen=True)
class HypergraphSpec:
    """Vertices plus hyperedges of size 2..max_edge_size."""

    n: int
    edges: tuple[tuple[int, ...], ...]
    max_edge_size: int = 3

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one vertex")
        if self.max_edge_size < 3:
            raise ValueError("max edge size is a constant >= 3")
        seen = set()
        for e in self.edges:
            if tuple(sorted(e)) != tuple(e):
                raise ValueError("edges must be stored sorted ascending")
            if not 2 <= len(e) <= self.max_edge_size:
                raise ValueError(f"edge {e} has size outside [2, {self.max_edge_size}]")
            if len(set(e)) != len(e):
                raise ValueError(f"edge {e} repeats a vertex")
            if min(e) < 0 or max(e) >= self.n:
                raise ValueError(f"edge {e} leaves the vertex range")
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)


def hypergraph(n: int, edges, max_edge_size: int = 3) -> HypergraphSpec:
    """Normalize edge containers into a canonical HypergraphSpec."""
    canon = tuple(sorted(tuple(sorted(e)) for e in edges))
    return HypergraphSpec(n, canon, max_edge_size)


def connectivity(g: HypergraphSpec) -> tuple[int, list[int]]:
    """Max and per-vertex counts of hyperedges incident to each vertex."""
    per_vertex = [0] * g.n
    for e in g.edges:
        for v in e:
            per_vertex[v] += 1
    return (max(per_vertex) if per_vertex else 0), per_vertex


def _edge_masks(g: HypergraphSpec) -> list[int]:
    masks = []
    for e in g.edges:
        m = 0
        for v in e:
            m |= bit_for_qubit(g.n, v)
        masks.append(m)
    return masks


def cz_phase_vector(g: HypergraphSpec) -> np.ndarray:
    """Diagonal of the product of all generalized-CZ gates, as +-1 entries."""
    dim = 1 << g.n
    idx = np.arange(dim, dtype=np.int64)
    phases = np.ones(dim, dtype=np.int64)
    for m in _edge_masks(g):
        phases[(idx & m) == m] *= -1
    return phases


def build_state(g: HypergraphSpec) -> DenseState:
    """The hypergraph state: phase flips of |+>^n on each edge's all-ones set."""
    if g.n > PURE_QUBIT_CAP:
        raise CapExceededError(f"pure states capped at {PURE_QUBIT_CAP} qubits")
    amps = cz_phase_vector(g) / np.sqrt(1 << g.n)
    return pure_state(amps.astype(complex), g.n)


def stabilizer_dense(g: HypergraphSpec, vertex: int) -> np.ndarray:
    """Dense matrix of the vertex stabilizer (CZ product) X_v (CZ product)."""
    if g.n > DENSE_QUBIT_CAP:
        raise CapExceededError(f"dense stabilizers capped at {DENSE_QUBIT_CAP} qubits")
    xbit = bit_for_qubit(g.n, vertex)
    dim = 1 << g.n
    idx = np.arange(dim, dtype=np.int64)
    d = cz_phase_vector(g)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[idx ^ xbit, idx] = d[idx ^ xbit] * d[idx]
    return mat


@dataclass(frozen=True)
class AdaptiveStabilizerForm:
    """Branch data for the adaptive single-shot stabilizer test of one vertex.

    ``cz_groups`` lists, for every incident hyperedge of size >= 3, the edge
    with the tested vertex removed, sorted ascending so the largest-index
    member is the canonical Z-carrier.  ``projector_support`` is the union of
    the non-carrier members; ``resolve`` maps an assignment of their bits to
    the branch sign and the residual set of Z-measured vertices.
    """

    n: int
    vertex: int
    z_neighbors: tuple[int, ...]
    cz_groups: tuple[tuple[int, ...], ...]
    projector_support: tuple[int, ...]
    _branches: dict = field(default_factory=dict, repr=False, compare=False)

    def resolve(self, a) -> tuple[int, frozenset[int]]:
        """Branch sign exponent and residual Z-set for projector bits ``a``.

        ``a`` is a bit sequence aligned with ``projector_support``.
        """
        a = tuple(int(b) for b in a)
        if len(a) != len(self.projector_support):
            raise ValueError("assignment length must match the projector support")
        if any(b not in (0, 1) for b in a):
            raise ValueError("assignment bits must be 0 or 1")
        key = 0
        for b in a:
            key = (key << 1) | b
        alpha, z_carriers = self.branch_for_bits(key)
        return alpha, frozenset(z_carriers)

    def branch_for_bits(self, key: int) -> tuple[int, tuple[int, ...]]:
        """resolve() on an integer-packed assignment, memoized (the hot path)."""
        hit = self._branches.get(key)
        if hit is not None:
            return hit
        support = self.projector_support
        width = len(support)
        bits = {v: (key >> (width - 1 - t)) & 1 for t, v in enumerate(support)}
        z_count: dict[int, int] = {}
        for v in self.z_neighbors:
            z_count[v] = z_count.get(v, 0) + 1
        for grp in self.cz_groups:
            if all(bits[v] for v in grp[:-1]):
                carrier = grp[-1]
                z_count[carrier] = z_count.get(carrier, 0) + 1
        alpha = 0
        residual = []
        for v, c in z_count.items():
            if c & 1:
                if v in bits:
                    alpha ^= bits[v]
                else:
                    residual.append(v)
        result = (alpha, tuple(sorted(residual)))
        if len(self._branches) < (1 << 20):
            self._branches[key] = result
        return result

    def bases(self) -> str:
        """Measurement bases of the test: X on the vertex, Z everywhere else."""
        return "".join("X" if j == self.vertex else "Z" for j in range(self.n))

    def branch_table(self) -> list[tuple[tuple[int, ...], int, tuple[int, ...]]]:
        """All (a, alpha, residual-Z) branches; exponential in the support size."""
        width = len(self.projector_support)
        out = []
        for key in range(1 << width):
            a = tuple((key >> (width - 1 - t)) & 1 for t in range(width))
            alpha, residual = self.branch_for_bits(key)
            out.append((a, alpha, residual))
        return out

    def dense(self) -> np.ndarray:
        """Stabilizer rebuilt from the branch sum (for cross-validation)."""
        if self.n > DENSE_QUBIT_CAP:
            raise CapExceededError(f"dense form capped at {DENSE_QUBIT_CAP} qubits")
        dim = 1 << self.n
        idx = np.arange(dim, dtype=np.int64)
        xbit = bit_for_qubit(self.n, self.vertex)
        out = np.zeros((dim, dim), dtype=complex)
        for a, alpha, residual in self.branch_table():
            keep = np.ones(dim, dtype=bool)
            for t, v in enumerate(self.projector_support):
                bit = bit_for_qubit(self.n, v)
                keep &= ((idx & bit) != 0) == bool(a[t])
            zmask = 0
            for v in residual:
                zmask |= bit_for_qubit(self.n, v)
            signs = sign_vector(dim, zmask)
            sel = idx[keep]
            out[sel ^ xbit, sel] += (-1) ** alpha * signs[keep]
        return out


def adaptive_form(g: HypergraphSpec, vertex: int) -> AdaptiveStabilizerForm:
    """Purely combinatorial branch data; works at any register width."""
    if not 0 <= vertex < g.n:
        raise ValueError(f"vertex {vertex} out of range")
    z_neighbors = []
    groups = []
    for e in g.edges:
        if vertex not in e:
            continue
        rest = tuple(v for v in e if v != vertex)
        if len(rest) == 1:
            z_neighbors.append(rest[0])
        else:
            groups.append(rest)  # sorted already; last member is the carrier
    support = sorted({v for grp in groups for v in grp[:-1]})
    return AdaptiveStabilizerForm(
        n=g.n,
        vertex=vertex,
        z_neighbors=tuple(sorted(z_neighbors)),
        cz_groups=tuple(sorted(groups)),
        projector_support=tuple(support),
    )


def all_adaptive_forms(g: HypergraphSpec) -> list[AdaptiveStabilizerForm]:
    return [adaptive_form(g, v) for v in range(g.n)]


def random_bms_instance(
    n: int, edge_prob: float, rng: np.random.Generator
) -> tuple[HypergraphSpec, tuple[int, ...]]:
    """Random instance with every pair/triple edge (and local Z) kept i.i.d.

    Single-vertex Z gates do not fit the hyperedge model (edges have size at
    least 2), so they come back as a separate local-Z layer that only matters
    when forming X-basis output distributions.
    """
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    edges = []
    for size in (2, 3):
        for combo in combinations(range(n), size):
            if rng.random() < edge_prob:
                edges.append(combo)
    z_layer = tuple(v for v in range(n) if rng.random() < edge_prob)
    return hypergraph(n, edges), z_layer


def random_bms_hypergraph(
    n: int, edge_prob: float, rng: np.random.Generator
) -> HypergraphSpec:
    return random_bms_instance(n, edge_prob, rng)[0]


def load_hypergraph(source: str | Path | dict) -> tuple[HypergraphSpec, tuple[int, ...]]:
    """Read {"n_vertices": int, "edges": [[int,...]], "z_layer"?: [int,...]}."""
    if isinstance(source, dict):
        obj = source
    else:
        obj = json.loads(Path(source).read_text())
    g = hypergraph(int(obj["n_vertices"]), obj["edges"])
    z_layer = tuple(sorted(int(v) for v in obj.get("z_layer", ())))
    for v in z_layer:
        if not 0 <= v < g.n:
            raise ValueError(f"z-layer vertex {v} out of range")
    return g, z_layer


def hypergraph_to_jsonable(g: HypergraphSpec, z_layer: tuple[int, ...] = ()) -> dict:
    return {
        "n_vertices": g.n,
        "edges": [list(e) for e in g.edges],
        "z_layer": list(z_layer),
    }
