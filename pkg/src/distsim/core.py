"""Graph and message data model, word accounting, execution traces and oracles.

Everything here is immutable after construction and safe to share between
concurrently executing engine workers.  All communication and space accounting
throughout the package is denominated in *words*: fixed-width integers whose
default width is ceil(log2 n) + 2 bits, wide enough for a vertex id plus a
couple of tag bits.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


# ---------------------------------------------------------------------------
# Word accounting
# ---------------------------------------------------------------------------

def word_width(n: int) -> int:
    """Default word width in bits for an n-vertex input: ceil(log2 n) + 2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return max((n - 1).bit_length(), 0) + 2


def fits_word(value: int, width_bits: int) -> bool:
    return 0 <= value < (1 << width_bits)


@dataclass(frozen=True)
class Word:
    """A single fixed-width accounting unit.

    Engines carry payloads as raw ints for speed; this type centralizes the
    width check they apply and the pack/unpack helpers used when several small
    fields travel as one word.
    """

    width_bits: int
    payload: int

    def __post_init__(self):
        if not fits_word(self.payload, self.width_bits):
            raise ValueError(
                f"payload {self.payload} does not fit in {self.width_bits} bits"
            )


def pack_fields(values: Sequence[int], widths: Sequence[int]) -> int:
    """Pack small non-negative ints into one word, first field most significant."""
    if len(values) != len(widths):
        raise ValueError("values/widths length mismatch")
    out = 0
    for value, width in zip(values, widths):
        if not fits_word(value, width):
            raise ValueError(f"field {value} does not fit in {width} bits")
        out = (out << width) | value
    return out


def unpack_fields(word: int, widths: Sequence[int]) -> tuple[int, ...]:
    out = []
    for width in reversed(widths):
        out.append(word & ((1 << width) - 1))
        word >>= width
    return tuple(reversed(out))


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on vertices 0..n-1.

    Edges are stored as sorted (u, v) pairs with u < v; construction rejects
    self-loops, duplicates and out-of-range endpoints.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise ValueError(f"bad edge ({u}, {v}) for n={self.n}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.neighbors)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set

    def incident_edges(self, v: int) -> tuple[tuple[int, int], ...]:
        """Sorted (u, w) pairs touching v; the per-node local input of the
        vertex-centric engines."""
        return tuple(sorted((min(v, u), max(v, u)) for u in self.neighbors[v]))

    def to_edge_list_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in sorted(self.edges))
        return "\n".join(lines) + "\n"


def normalize_edges(pairs: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((min(u, v), max(u, v)) for u, v in pairs))


def load_graph(source: str) -> Graph:
    """Parse edge-list text: first line "n m", then one "u v" line per edge.

    Rejects malformed lines, out-of-range endpoints, self-loops and duplicate
    edges (in either orientation), naming the offending line.
    """
    lines = source.splitlines()
    meaningful = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not meaningful:
        raise GraphFormatError(1, "empty input")
    line_no, header = meaningful[0]
    parts = header.split()
    if len(parts) != 2:
        raise GraphFormatError(line_no, f"expected header 'n m', got {header!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphFormatError(line_no, f"non-integer header {header!r}") from None
    if n < 1:
        raise GraphFormatError(line_no, f"vertex count {n} must be >= 1")
    if m < 0:
        raise GraphFormatError(line_no, f"edge count {m} must be >= 0")
    body = meaningful[1:]
    if len(body) != m:
        raise GraphFormatError(
            body[-1][0] if body else line_no,
            f"header promises {m} edges, found {len(body)}",
        )
    seen: set[tuple[int, int]] = set()
    edges = []
    for edge_line_no, text in body:
        parts = text.split()
        if len(parts) != 2:
            raise GraphFormatError(edge_line_no, f"expected 'u v', got {text!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(edge_line_no, f"non-integer edge {text!r}") from None
        if u == v:
            raise GraphFormatError(edge_line_no, f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(
                edge_line_no, f"endpoint out of range in ({u}, {v}), n={n}"
            )
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(edge_line_no, f"duplicate edge ({u}, {v})")
        seen.add(key)
        edges.append(key)
    return Graph(n=n, edges=tuple(sorted(edges)))


def gen_graph(kind: str, n: int, *, prob: float | None = None, seed: int = 0) -> Graph:
    """Deterministic graph generator: path, cycle, complete, gnp or star.

    The same (kind, n, prob, seed) always yields the identical edge set.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        if n < 3:
            raise ValueError("cycle needs n >= 3")
        edges = [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]
    elif kind == "complete":
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    elif kind == "star":
        edges = [(0, i) for i in range(1, n)]
    elif kind == "gnp":
        if prob is None or not (0.0 <= prob <= 1.0):
            raise ValueError("probability out of range")
        rng = random.Random(seed)
        edges = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if rng.random() < prob
        ]
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    return Graph(n=n, edges=tuple(sorted(edges)))


# ---------------------------------------------------------------------------
# Connectivity oracle (two independent routes, cross-checked on every call)
# ---------------------------------------------------------------------------

class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:  # path compression
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def components_by_union_find(g: Graph) -> list[int]:
    uf = UnionFind(g.n)
    for u, v in g.edges:
        uf.union(u, v)
    smallest: dict[int, int] = {}
    for v in range(g.n):  # ascending, so first hit per root is the minimum
        smallest.setdefault(uf.find(v), v)
    return [smallest[uf.find(v)] for v in range(g.n)]


def components_by_bfs(g: Graph) -> list[int]:
    labels = [-1] * g.n
    for start in range(g.n):
        if labels[start] != -1:
            continue
        labels[start] = start
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for u in g.neighbors[v]:
                if labels[u] == -1:
                    labels[u] = start
                    queue.append(u)
    return labels


def components_oracle(g: Graph) -> list[int]:
    """Map each vertex to the minimum vertex id in its connected component.

    Computed by union-find and independently by BFS; any disagreement is a
    bug, so both run on every call.
    """
    a = components_by_union_find(g)
    b = components_by_bfs(g)
    if a != b:
        raise AssertionError("connectivity oracle mismatch between union-find and BFS")
    return a


# ---------------------------------------------------------------------------
# Messages and traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Message:
    """One message between participants; payload length is its word cost.

    Self-messages (src == dst) are allowed and cost nothing: budgets constrain
    communication, not state a participant keeps for itself.
    """

    src: int
    dst: int
    payload: tuple[int, ...]
    round: int = 0

    def __post_init__(self):
        if not isinstance(self.payload, tuple):
            object.__setattr__(self, "payload", tuple(self.payload))
        if len(self.payload) < 1:
            raise ValueError("payload must contain at least one word")

    @property
    def words(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class RoundRecord:
    """Ledger for one round: transfers as (src, dst, words) plus the
    per-participant space high-water mark in words."""

    transfers: tuple[tuple[int, int, int], ...]
    space: tuple[int, ...]

    def sent_words(self, participant: int) -> int:
        return sum(w for s, _, w in self.transfers if s == participant)

    def recv_words(self, participant: int) -> int:
        return sum(w for _, d, w in self.transfers if d == participant)


@dataclass(frozen=True)
class RoundTrace:
    """Per-round ledger of every transfer; the evidence carrier every bound
    check reads.  Round r (1-based) lives at rounds[r-1]."""

    num_participants: int
    rounds: tuple[RoundRecord, ...]

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def sent_words(self, participant: int, round_no: int) -> int:
        return self.rounds[round_no - 1].sent_words(participant)

    def recv_words(self, participant: int, round_no: int) -> int:
        return self.rounds[round_no - 1].recv_words(participant)

    def max_traffic(self) -> int:
        """Largest per-participant sent or received word count in any round."""
        worst = 0
        for rec in self.rounds:
            sent = [0] * self.num_participants
            recv = [0] * self.num_participants
            for s, d, w in rec.transfers:
                sent[s] += w
                recv[d] += w
            if sent:
                worst = max(worst, max(sent), max(recv))
        return worst

    def space_high_water(self) -> tuple[int, ...]:
        """Per-participant maximum space over all rounds."""
        peaks = [0] * self.num_participants
        for rec in self.rounds:
            for i, s in enumerate(rec.space):
                if s > peaks[i]:
                    peaks[i] = s
        return tuple(peaks)

    def to_per_round_json(self) -> list[dict]:
        return [
            {
                "transfers": [[s, d, w] for s, d, w in rec.transfers],
                "space": list(rec.space),
            }
            for rec in self.rounds
        ]

    @staticmethod
    def from_per_round_json(num_participants: int, per_round: list[dict]) -> "RoundTrace":
        rounds = []
        for rec in per_round:
            transfers = tuple((int(s), int(d), int(w)) for s, d, w in rec["transfers"])
            space = tuple(int(x) for x in rec.get("space", [0] * num_participants))
            rounds.append(RoundRecord(transfers=transfers, space=space))
        return RoundTrace(num_participants=num_participants, rounds=tuple(rounds))
