"""Constant-round clique routing for loads of up to O(n) words per node.

Any demand in which every node is the source and the destination of at most
c*n words is delivered through two phases: each word is assigned an
intermediate node, travels source -> intermediate in phase A and
intermediate -> destination in phase B.  Assigning intermediates via a proper
edge coloring of the bipartite demand multigraph (sources left, destinations
right, one parallel edge per word) guarantees that no ordered pair ever
carries more than one word per round: words sharing a source have distinct
colors, and so do words sharing a destination.  A proper coloring with at
most max-degree colors always exists for bipartite multigraphs and is found
constructively by alternating-path recoloring.

The schedule is computed by a central planner with global knowledge of the
demand matrix and then replayed through the constraint-checked clique engine,
which re-verifies the per-pair capacity on every round.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .core import Graph, Message, pack_fields, unpack_fields, word_width
from .engines import ModelParams, NodeProgram, RunResult, run_clique


@dataclass(frozen=True)
class DemandMatrix:
    """Word counts per (source, destination) pair for one routing episode."""

    n: int
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.counts) != self.n or any(len(row) != self.n for row in self.counts):
            raise ValueError("demand matrix must be n x n")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("demand counts must be non-negative")

    @staticmethod
    def from_rows(rows: list[list[int]]) -> "DemandMatrix":
        return DemandMatrix(n=len(rows), counts=tuple(tuple(r) for r in rows))

    @cached_property
    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @cached_property
    def col_sums(self) -> tuple[int, ...]:
        return tuple(sum(self.counts[s][d] for s in range(self.n))
                     for d in range(self.n))

    @property
    def total_words(self) -> int:
        return sum(self.row_sums)

    @property
    def max_degree(self) -> int:
        if self.total_words == 0:
            return 0
        return max(max(self.row_sums), max(self.col_sums))

    def words(self) -> list[tuple[int, int, int]]:
        """Every demanded word as (src, dst, seq), in canonical order."""
        out = []
        for s in range(self.n):
            for d in range(self.n):
                out.extend((s, d, q) for q in range(self.counts[s][d]))
        return out


def edge_color_bipartite(n_left: int, n_right: int,
                         edges: list[tuple[int, int]],
                         max_colors: int) -> list[int]:
    """Properly edge-color a bipartite multigraph with at most max-degree
    colors (and never more than max_colors).

    Edges are (left, right) pairs; parallel edges are simply repeated
    entries.  Colors are assigned by single-edge insertion: the smallest
    color free at both endpoints if one exists, otherwise an alternating
    two-color path from the right endpoint is flipped to free one up.
    Ties always break toward the smallest color index, so the result is
    deterministic in the input order.
    """
    deg_l = [0] * n_left
    deg_r = [0] * n_right
    for u, v in edges:
        if not (0 <= u < n_left and 0 <= v < n_right):
            raise ValueError(f"edge ({u}, {v}) out of range")
        deg_l[u] += 1
        deg_r[v] += 1
    max_degree = max(deg_l + deg_r, default=0)
    if max_degree > max_colors:
        raise ValueError(
            f"degree {max_degree} exceeds the {max_colors}-color budget")

    palette = max_degree
    colors: list[int] = [-1] * len(edges)
    used_l: list[dict[int, int]] = [{} for _ in range(n_left)]  # color -> edge
    used_r: list[dict[int, int]] = [{} for _ in range(n_right)]

    for ei, (u, v) in enumerate(edges):
        c = 0
        while c < palette and (c in used_l[u] or c in used_r[v]):
            c += 1
        if c < palette:
            colors[ei] = c
            used_l[u][c] = ei
            used_r[v][c] = ei
            continue

        # No shared free color: take a free at u, b free at v, flip the
        # maximal a/b-alternating path starting from v.  The path can never
        # reach u (left nodes are entered through a-colored edges and a is
        # free at u), so after the flip a is free at both endpoints.
        a = next(c for c in range(palette) if c not in used_l[u])
        b = next(c for c in range(palette) if c not in used_r[v])
        path = []
        node, on_right, want = v, True, a
        while True:
            table = used_r[node] if on_right else used_l[node]
            nxt = table.get(want)
            if nxt is None:
                break
            path.append(nxt)
            pu, pv = edges[nxt]
            node = pu if on_right else pv
            on_right = not on_right
            want = b if want == a else a
        for pe in path:
            pu, pv = edges[pe]
            del used_l[pu][colors[pe]]
            del used_r[pv][colors[pe]]
        for pe in path:
            colors[pe] = b if colors[pe] == a else a
            pu, pv = edges[pe]
            used_l[pu][colors[pe]] = pe
            used_r[pv][colors[pe]] = pe
        colors[ei] = a
        used_l[u][a] = ei
        used_r[v][a] = ei

    return colors


def coloring_is_proper(edges: list[tuple[int, int]], colors: list[int]) -> bool:
    seen_l: set[tuple[int, int]] = set()
    seen_r: set[tuple[int, int]] = set()
    for (u, v), c in zip(edges, colors):
        if (u, c) in seen_l or (v, c) in seen_r:
            return False
        seen_l.add((u, c))
        seen_r.add((v, c))
    return True


@dataclass(frozen=True)
class Schedule:
    """Two-phase routing plan.

    Every demanded word (src, dst, seq) is assigned an intermediate node and
    one phase-A round (src -> intermediate) plus one phase-B round
    (intermediate -> dst).  Rounds are numbered globally and 1-based: phase A
    occupies rounds 1..phase_a_rounds, phase B the following rounds, so the
    phase-A slot of a word always precedes its phase-B slot.
    """

    n: int
    phase_a_rounds: int
    phase_b_rounds: int
    entries: tuple[tuple[int, int, int, int, int, int], ...]
    # entry = (src, dst, seq, intermediate, round_a, round_b)

    @property
    def num_rounds(self) -> int:
        return self.phase_a_rounds + self.phase_b_rounds

    @cached_property
    def assignment(self) -> dict[tuple[int, int, int], tuple[int, int, int]]:
        return {(s, d, q): (mid, ra, rb) for s, d, q, mid, ra, rb in self.entries}

    def transfers_by_round(self) -> dict[int, list[tuple[int, int]]]:
        """(sender, receiver) pairs per round; for capacity inspection."""
        out: dict[int, list[tuple[int, int]]] = {}
        for s, d, _q, mid, ra, rb in self.entries:
            out.setdefault(ra, []).append((s, mid))
            out.setdefault(rb, []).append((mid, d))
        return out

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "rounds": self.num_rounds,
            "phase_a_rounds": self.phase_a_rounds,
            "phase_b_rounds": self.phase_b_rounds,
            "entries": [list(e) for e in self.entries],
        }


def plan_routing(dm: DemandMatrix, *, c_traffic: int = 4) -> Schedule:
    """Plan delivery of a demand matrix in 2 * ceil(max_degree / n) clique
    rounds: exactly 2 whenever every row and column sum is at most n, and 0
    for an empty demand."""
    limit = c_traffic * dm.n
    for s, total in enumerate(dm.row_sums):
        if total > limit:
            raise ValueError(f"row {s} demands {total} words, above {limit}")
    for d, total in enumerate(dm.col_sums):
        if total > limit:
            raise ValueError(f"column {d} demands {total} words, above {limit}")

    words = dm.words()
    if not words:
        return Schedule(n=dm.n, phase_a_rounds=0, phase_b_rounds=0, entries=())

    edges = [(s, d) for s, d, _q in words]
    colors = edge_color_bipartite(dm.n, dm.n, edges, max_colors=dm.max_degree)
    colors_used = max(colors) + 1
    subrounds = -(-colors_used // dm.n)  # ceil

    entries = []
    for (s, d, q), color in zip(words, colors):
        mid = color % dm.n
        sub = color // dm.n
        entries.append((s, d, q, mid, sub + 1, subrounds + sub + 1))
    return Schedule(n=dm.n, phase_a_rounds=subrounds, phase_b_rounds=subrounds,
                    entries=tuple(entries))


# ---------------------------------------------------------------------------
# Replaying a schedule through the clique engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeliveryRecord:
    """What a schedule replay actually delivered, plus the engine evidence."""

    schedule: Schedule
    run: RunResult
    delivered: tuple[tuple[tuple[int, int, int], ...], ...]
    # delivered[dst] = sorted (src, seq, value) triples


class _RoutingProgram(NodeProgram):
    """Clique node that plays its part of a fixed two-phase schedule.

    Each transferred word packs (counterpart id, seq, value) into a single
    engine word: in phase A the counterpart field carries the final
    destination, in phase B the original source.  One extra receive-only
    round after the last phase-B round absorbs the final deliveries.
    """

    def __init__(self, schedule: Schedule, payloads: dict,
                 widths: tuple[int, int, int]):
        self.schedule = schedule
        self.widths = widths
        self.immediate_halt = schedule.num_rounds == 0
        # per source: (round_a, mid, dst, seq, value), canonically ordered
        self.outgoing: dict[int, list[tuple[int, int, int, int, int]]] = {}
        for (s, d, q), (mid, ra, _rb) in sorted(schedule.assignment.items()):
            self.outgoing.setdefault(s, []).append(
                (ra, mid, d, q, payloads[(s, d, q)]))

    def init(self, pid: int, local_input):
        # state: (pid, this round number, to-forward words, delivered words)
        return (pid, 1, (), ())

    def on_round(self, state, inbox):
        pid, round_no, to_forward, delivered = state
        ra_rounds = self.schedule.phase_a_rounds
        last_round = self.schedule.num_rounds + 1  # receive-only absorb round

        forward = list(to_forward)
        arrived = list(delivered)
        for msg in inbox:
            for word in msg.payload:
                counterpart, seq, value = unpack_fields(word, self.widths)
                if msg.round <= ra_rounds:
                    # phase-A arrival at the intermediate; counterpart is the
                    # final destination, msg.src the original source
                    mid, _ra, rb = self.schedule.assignment[(msg.src, counterpart, seq)]
                    if mid != pid:
                        raise RuntimeError("schedule routed a word to the wrong node")
                    forward.append((rb, counterpart, msg.src, seq, value))
                else:
                    # phase-B arrival at the destination; counterpart is the src
                    arrived.append((counterpart, seq, value))

        outbox = []
        if round_no <= ra_rounds:
            for ra, mid, dst, seq, value in self.outgoing.get(pid, ()):
                if ra == round_no:
                    word = pack_fields((dst, seq, value), self.widths)
                    outbox.append(Message(src=pid, dst=mid, payload=(word,)))
        keep = []
        for rb, dst, src, seq, value in forward:
            if rb == round_no:
                word = pack_fields((src, seq, value), self.widths)
                outbox.append(Message(src=pid, dst=dst, payload=(word,)))
            else:
                keep.append((rb, dst, src, seq, value))

        halt = round_no >= last_round
        new_state = (pid, round_no + 1, tuple(keep), tuple(sorted(arrived)))
        return new_state, outbox, halt

    def output(self, state) -> list[int]:
        _pid, _round_no, _pending, delivered = state
        out: list[int] = []
        for src, seq, value in delivered:
            out.extend((src, seq, value))
        return out


def _packing_widths(sched: Schedule, payloads: dict,
                    value_width: int | None) -> tuple[int, int, int]:
    w_id = max(1, (sched.n - 1).bit_length())
    max_seq = max((q for _s, _d, q in sched.assignment), default=0)
    w_seq = max(1, max_seq.bit_length())
    if value_width is None:
        value_width = word_width(sched.n)
    max_val = max(payloads.values(), default=0)
    w_val = max(value_width, max_val.bit_length(), 1)
    return (w_id, w_seq, w_val)


def execute_schedule(sched: Schedule, payloads: dict[tuple[int, int, int], int],
                     *, value_width: int | None = None) -> DeliveryRecord:
    """Replay a schedule on the constraint-checked clique engine.

    payloads maps each scheduled (src, dst, seq) to its value word.  Every
    word must arrive at its destination tagged with the original source and
    sequence number, and the engine trace must be clean; anything else is an
    internal consistency failure, not a recoverable condition.  The replay
    takes num_rounds + 1 engine rounds: the trailing round only absorbs the
    final deliveries and sends nothing.
    """
    expected = set(sched.assignment)
    if set(payloads) != expected:
        raise ValueError("payload keys do not match the scheduled words")

    if not expected:
        params = ModelParams.clique(sched.n)
        prog = _RoutingProgram(sched, payloads, (1, 1, 1))
        run = run_clique(prog, Graph(n=sched.n, edges=()), params)
        return DeliveryRecord(schedule=sched, run=run,
                              delivered=tuple(() for _ in range(sched.n)))

    widths = _packing_widths(sched, payloads, value_width)
    params = ModelParams.clique(sched.n, word_width_bits=sum(widths))
    prog = _RoutingProgram(sched, payloads, widths)
    run = run_clique(prog, Graph(n=sched.n, edges=()), params)
    if not run.clean:
        raise RuntimeError(f"schedule replay violated the model: {run.violations[0]}")

    delivered = []
    for dst in range(sched.n):
        words = run.outputs[dst]
        triples = tuple(
            (words[i], words[i + 1], words[i + 2])
            for i in range(0, len(words), 3)
        )
        delivered.append(triples)

    for (s, d, q), value in payloads.items():
        if (s, q, value) not in delivered[d]:
            raise RuntimeError(
                f"word ({s}->{d}, seq {q}) was not delivered intact")
    total = sum(len(t) for t in delivered)
    if total != len(payloads):
        raise RuntimeError("delivered word count does not match the demand")

    return DeliveryRecord(schedule=sched, run=run, delivered=tuple(delivered))
