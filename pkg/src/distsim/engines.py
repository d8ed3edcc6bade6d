"""Execution engines for the four computation models.

Each engine runs a NodeProgram in synchronous rounds and enforces the model's
communication and space constraints on every round, emitting a RoundTrace.
A budget overrun is not an exception: the run aborts and the overrun is
recorded as a Violation in the result, so that re-checking the trace with
check_trace reproduces exactly the same finding.

Execution is sequential and deterministic: within a round all participants'
transitions are independent (programs must be pure), messages are delivered in
canonical (sender id, emission order) order, and identical inputs produce
bit-identical results.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from enum import Enum

from .core import Graph, Message, RoundRecord, RoundTrace, fits_word, word_width


class ModelKind(str, Enum):
    CONGEST = "CONGEST"
    CLIQUE = "CLIQUE"
    MPC = "MPC"
    SEMI_MPC = "SEMI_MPC"


class EngineContractError(RuntimeError):
    """A program or caller broke the engine contract (bad message, bad input)."""


class RoundLimitError(RuntimeError):
    """The program failed to halt within the round cap."""


@dataclass(frozen=True)
class Violation:
    """One budget overrun, as data.  round 0 marks pre-run parameter laws."""

    rule: str
    round: int
    src: int | None = None
    dst: int | None = None
    participant: int | None = None
    measured: int = 0
    allowed: int = 0

    @property
    def ratio(self) -> float:
        return self.measured / self.allowed if self.allowed else math.inf

    def to_json_dict(self) -> dict:
        return {
            "rule": self.rule,
            "round": self.round,
            "src": self.src,
            "dst": self.dst,
            "participant": self.participant,
            "measured": self.measured,
            "allowed": self.allowed,
        }


@dataclass(frozen=True)
class ModelParams:
    """Model kind plus budgets.

    Asymptotic budgets are enforced as (constant multiplier) * bound with the
    multipliers configurable: c_space scales per-machine space, c_traffic
    scales per-participant traffic, c_total and polylog_exp shape the total
    space law p*s <= c_total * ell^(1+delta) * log2(ell)^polylog_exp.
    """

    kind: ModelKind
    p: int
    s: int = 0
    n: int | None = None
    word_width_bits: int = 8
    delta: float = 0.0
    ell: int = 0
    c_space: int = 4
    c_traffic: int = 4
    c_total: int = 4
    polylog_exp: int = 2
    round_cap: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.word_width_bits < 1:
            raise ValueError("word width must be >= 1 bit")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError("delta must lie in [0, 1)")
        if self.kind in (ModelKind.CONGEST, ModelKind.CLIQUE):
            if self.n is None or self.p != self.n:
                raise ValueError(f"{self.kind.value} requires one participant per vertex")
        if self.kind == ModelKind.SEMI_MPC and self.n is None:
            raise ValueError("SEMI_MPC requires the vertex count n")

    # -- factories ---------------------------------------------------------

    @staticmethod
    def clique(n: int, *, word_width_bits: int | None = None, c_space: int = 4,
               c_traffic: int = 4, round_cap: int | None = None) -> "ModelParams":
        return ModelParams(
            kind=ModelKind.CLIQUE, p=n, n=n,
            word_width_bits=word_width_bits or word_width(n),
            c_space=c_space, c_traffic=c_traffic, round_cap=round_cap,
        )

    @staticmethod
    def congest(n: int, *, word_width_bits: int | None = None, c_space: int = 4,
                c_traffic: int = 4, round_cap: int | None = None) -> "ModelParams":
        return ModelParams(
            kind=ModelKind.CONGEST, p=n, n=n,
            word_width_bits=word_width_bits or word_width(n),
            c_space=c_space, c_traffic=c_traffic, round_cap=round_cap,
        )

    @staticmethod
    def semi_mpc(n: int, p: int, *, ell: int, delta: float = 0.0,
                 word_width_bits: int | None = None, c_space: int = 4,
                 c_traffic: int = 4, c_total: int = 4, polylog_exp: int = 2,
                 round_cap: int | None = None) -> "ModelParams":
        return ModelParams(
            kind=ModelKind.SEMI_MPC, p=p, s=c_space * n, n=n,
            word_width_bits=word_width_bits or word_width(n),
            delta=delta, ell=ell, c_space=c_space, c_traffic=c_traffic,
            c_total=c_total, polylog_exp=polylog_exp, round_cap=round_cap,
        )

    @staticmethod
    def mpc(p: int, s: int, *, ell: int, delta: float = 0.0,
            word_width_bits: int = 16, c_space: int = 4, c_traffic: int = 4,
            c_total: int = 4, polylog_exp: int = 2,
            round_cap: int | None = None) -> "ModelParams":
        return ModelParams(
            kind=ModelKind.MPC, p=p, s=s, word_width_bits=word_width_bits,
            delta=delta, ell=ell, c_space=c_space, c_traffic=c_traffic,
            c_total=c_total, polylog_exp=polylog_exp, round_cap=round_cap,
        )

    # -- laws ----------------------------------------------------------------

    def effective_round_cap(self) -> int:
        return self.round_cap if self.round_cap is not None else 10 * self.p + 100

    def total_space_bound(self) -> int:
        """c_total * L^(1+delta) * log2(L)^polylog_exp, floored.

        L is the input size in words; when the model carries a vertex count,
        an n-vertex graph instance is never smaller than its vertex set, so
        L = max(ell, n).  Without this floor the law would reject every
        sparse graph even on a single machine.
        """
        if self.ell <= 0:
            return 0
        size = max(self.ell, self.n or 0)
        log_term = math.log2(max(size, 2)) ** self.polylog_exp
        return int(self.c_total * (size ** (1.0 + self.delta)) * log_term)

    def start_violations(self) -> list[Violation]:
        """Machine-count and total-space laws, checked before round 1."""
        out: list[Violation] = []
        if self.kind not in (ModelKind.MPC, ModelKind.SEMI_MPC):
            return out
        if self.p > self.s:
            out.append(Violation(rule="machine-count", round=0,
                                 measured=self.p, allowed=self.s))
        if self.kind == ModelKind.SEMI_MPC and self.s != self.c_space * self.n:
            out.append(Violation(rule="space-law", round=0,
                                 measured=self.s, allowed=self.c_space * self.n))
        if self.ell > 0:
            bound = self.total_space_bound()
            if self.p * self.s > bound:
                out.append(Violation(rule="total-space", round=0,
                                     measured=self.p * self.s, allowed=bound))
        return out

    def min_delta_for_total_space(self) -> float | None:
        """Smallest delta in [0, 1) satisfying the total space law, or None
        if no replication exponent below 1 suffices."""
        if self.ell <= 0:
            return None
        if replace(self, delta=0.0).total_space_bound() >= self.p * self.s:
            return 0.0
        size = max(self.ell, self.n or 0)
        if size <= 1:
            return None
        log_term = math.log2(max(size, 2)) ** self.polylog_exp
        need = self.p * self.s / (self.c_total * log_term)
        exponent = math.log(need) / math.log(size) - 1.0
        delta = max(0.0, min(exponent + 1e-9, 0.999999))
        if replace(self, delta=delta).total_space_bound() >= self.p * self.s:
            return delta
        return None

    def with_min_delta(self) -> "ModelParams":
        """Copy with the smallest replication exponent that satisfies the
        total-space law, when one below 1 exists; otherwise unchanged."""
        if not any(v.rule == "total-space" for v in self.start_violations()):
            return self
        delta = self.min_delta_for_total_space()
        return replace(self, delta=delta) if delta is not None else self

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "p": self.p,
            "s": self.s,
            "n": self.n,
            "word_width_bits": self.word_width_bits,
            "delta": self.delta,
            "ell": self.ell,
            "c_space": self.c_space,
            "c_traffic": self.c_traffic,
            "c_total": self.c_total,
            "polylog_exp": self.polylog_exp,
            "round_cap": self.round_cap,
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "ModelParams":
        return ModelParams(
            kind=ModelKind(doc["kind"]),
            p=int(doc["p"]),
            s=int(doc["s"]),
            n=doc["n"] if doc.get("n") is None else int(doc["n"]),
            word_width_bits=int(doc["word_width_bits"]),
            delta=float(doc["delta"]),
            ell=int(doc["ell"]),
            c_space=int(doc["c_space"]),
            c_traffic=int(doc["c_traffic"]),
            c_total=int(doc["c_total"]),
            polylog_exp=int(doc["polylog_exp"]),
            round_cap=doc.get("round_cap"),
        )


class NodeProgram:
    """Per-participant deterministic state machine.

    Subclasses implement three transitions:

      init(pid, local_input) -> state
      on_round(state, inbox) -> (state, outbox, halt)
      output(state) -> list of result words

    The inbox is canonically ordered by (sender id, emission order).  Once any
    participant returns halt=True, the whole run stops after that round; the
    halting round's messages are recorded and budget-checked but never
    delivered.  A program whose class sets immediate_halt=True runs zero
    rounds: outputs come straight from the init states.

    States must be built from ints and containers of ints (tuples, lists,
    dicts with int keys) so the engine can meter their size in words.
    """

    immediate_halt = False

    def init(self, pid: int, local_input):
        raise NotImplementedError

    def on_round(self, state, inbox: list[Message]):
        raise NotImplementedError

    def output(self, state) -> list[int]:
        raise NotImplementedError


def words_in(obj) -> int:
    """Size of a program state in words.  Ints are one word each; containers
    are the sum of their contents; anything else is rejected so programs
    cannot hide data from the accounting."""
    if obj is None:
        return 0
    if isinstance(obj, bool) or isinstance(obj, int):
        return 1
    if isinstance(obj, (tuple, list, set, frozenset)):
        return sum(words_in(x) for x in obj)
    if isinstance(obj, dict):
        return sum(words_in(k) + words_in(v) for k, v in obj.items())
    raise TypeError(f"cannot meter {type(obj).__name__} in program state")


@dataclass
class RunResult:
    """Outcome of one engine run: rounds used, outputs, trace, violations.

    outputs is None when the run aborted on a violation.  Serializes to the
    fixed JSON layout consumed by the CLI and the trace verifier.
    """

    params: ModelParams
    rounds_used: int
    outputs: list[list[int]] | None
    trace: RoundTrace
    violations: list[Violation]
    graph: Graph | None = None

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        doc = {
            "model": self.params.kind.value,
            "params": self.params.to_json_dict(),
            "rounds": self.rounds_used,
            "violations": [v.to_json_dict() for v in self.violations],
            "per_round": self.trace.to_per_round_json(),
            "outputs": self.outputs,
            "space_high_water": list(self.trace.space_high_water()),
        }
        if self.graph is not None:
            doc["graph"] = {
                "n": self.graph.n,
                "m": self.graph.m,
                "edges": [[u, v] for u, v in self.graph.edges],
            }
        return doc


# ---------------------------------------------------------------------------
# Per-round budget checking (shared verbatim by engines and check_trace)
# ---------------------------------------------------------------------------

def _round_violations(round_no: int, transfers, space, params: ModelParams,
                      graph: Graph | None) -> list[Violation]:
    out: list[Violation] = []
    if params.kind in (ModelKind.CLIQUE, ModelKind.CONGEST):
        pair_load: dict[tuple[int, int], int] = {}
        flagged: set[tuple[int, int]] = set()
        for s, d, w in transfers:
            if params.kind == ModelKind.CONGEST and graph is not None \
                    and not graph.has_edge(s, d):
                if (s, d) not in flagged:
                    flagged.add((s, d))
                    out.append(Violation(rule="non-edge", round=round_no,
                                         src=s, dst=d, measured=w, allowed=0))
                continue
            load = pair_load.get((s, d), 0) + w
            pair_load[(s, d)] = load
            if load > 1 and (s, d) not in flagged:
                flagged.add((s, d))
                out.append(Violation(rule="pair-capacity", round=round_no,
                                     src=s, dst=d, measured=load, allowed=1))
    else:
        sent = [0] * params.p
        recv = [0] * params.p
        for s, d, w in transfers:
            sent[s] += w
            recv[d] += w
        for i in range(params.p):
            if sent[i] > params.s:
                out.append(Violation(rule="sent-budget", round=round_no,
                                     participant=i, measured=sent[i],
                                     allowed=params.s))
            if recv[i] > params.s:
                out.append(Violation(rule="recv-budget", round=round_no,
                                     participant=i, measured=recv[i],
                                     allowed=params.s))
            if space[i] > params.s:
                out.append(Violation(rule="space-budget", round=round_no,
                                     participant=i, measured=space[i],
                                     allowed=params.s))
    return out


def check_trace(trace: RoundTrace, params: ModelParams,
                graph: Graph | None = None) -> list[Violation]:
    """Recompute every budget from the raw transfers, independently of the
    engine.  A clean engine run re-checked here must come back empty; an
    aborted run re-checked here reproduces the same violations."""
    out = list(params.start_violations())
    for idx, rec in enumerate(trace.rounds):
        out.extend(_round_violations(idx + 1, rec.transfers, rec.space,
                                     params, graph))
    return out


# ---------------------------------------------------------------------------
# The engine core
# ---------------------------------------------------------------------------

def _execute(prog: NodeProgram, local_inputs: list, params: ModelParams,
             graph: Graph | None) -> RunResult:
    p = params.p
    width = params.word_width_bits

    start = params.start_violations()
    if start:
        return RunResult(params=params, rounds_used=0, outputs=None,
                         trace=RoundTrace(p, ()), violations=start, graph=graph)

    states = [prog.init(i, local_inputs[i]) for i in range(p)]

    if prog.immediate_halt:
        outputs = [list(prog.output(states[i])) for i in range(p)]
        return RunResult(params=params, rounds_used=0, outputs=outputs,
                         trace=RoundTrace(p, ()), violations=[], graph=graph)

    cap = params.effective_round_cap()
    pending: list[list[Message]] = [[] for _ in range(p)]
    records: list[RoundRecord] = []
    round_no = 0

    while True:
        round_no += 1
        if round_no > cap:
            raise RoundLimitError(
                f"program did not halt within {cap} rounds")
        inboxes, pending = pending, [[] for _ in range(p)]
        transfers: list[tuple[int, int, int]] = []
        space = [0] * p
        halt = False

        for i in range(p):
            inbox = inboxes[i]
            pre = words_in(states[i]) + sum(m.words for m in inbox)
            state, outbox, halted = prog.on_round(states[i], inbox)
            states[i] = state
            space[i] = max(pre, words_in(state))
            halt = halt or halted
            for msg in outbox:
                if msg.src != i:
                    raise EngineContractError(
                        f"participant {i} emitted a message claiming src={msg.src}")
                if not (0 <= msg.dst < p):
                    raise EngineContractError(
                        f"message to unknown participant {msg.dst}")
                for value in msg.payload:
                    if not fits_word(value, width):
                        raise EngineContractError(
                            f"payload word {value} overflows {width}-bit words")
                delivered = Message(src=i, dst=msg.dst, payload=msg.payload,
                                    round=round_no)
                if msg.dst == i:
                    # self-messages carry state across rounds, cost-free
                    pending[i].append(delivered)
                else:
                    transfers.append((i, msg.dst, delivered.words))
                    pending[msg.dst].append(delivered)

        records.append(RoundRecord(transfers=tuple(transfers), space=tuple(space)))
        bad = _round_violations(round_no, transfers, space, params, graph)
        if bad:
            return RunResult(params=params, rounds_used=round_no, outputs=None,
                             trace=RoundTrace(p, tuple(records)),
                             violations=bad, graph=graph)
        if halt:
            outputs = [list(prog.output(states[i])) for i in range(p)]
            return RunResult(params=params, rounds_used=round_no,
                             outputs=outputs,
                             trace=RoundTrace(p, tuple(records)),
                             violations=[], graph=graph)


def distribute_edges(g: Graph, p: int, seed: int = 0) -> list[list[int]]:
    """Adversarial-ish initial placement of edge words on p machines: edges
    are shuffled by the seed and dealt round-robin, two words per edge."""
    order = list(g.edges)
    random.Random(seed).shuffle(order)
    out: list[list[int]] = [[] for _ in range(p)]
    for i, (u, v) in enumerate(order):
        out[i % p].extend((u, v))
    return out


def run_clique(prog: NodeProgram, g: Graph,
               params: ModelParams | None = None) -> RunResult:
    """Congested clique: one participant per vertex, any ordered pair may
    exchange at most one word per round.  Local input is the vertex's
    incident edge list."""
    if params is None:
        params = ModelParams.clique(g.n)
    if params.kind != ModelKind.CLIQUE or params.p != g.n:
        raise EngineContractError("params do not describe a clique on this graph")
    inputs = [g.incident_edges(v) for v in range(g.n)]
    return _execute(prog, inputs, params, g)


def run_congest(prog: NodeProgram, g: Graph,
                params: ModelParams | None = None) -> RunResult:
    """CONGEST: like the clique but messages may only travel along edges of
    the input graph; transfers off-graph are violations."""
    if params is None:
        params = ModelParams.congest(g.n)
    if params.kind != ModelKind.CONGEST or params.p != g.n:
        raise EngineContractError("params do not describe CONGEST on this graph")
    inputs = [g.incident_edges(v) for v in range(g.n)]
    return _execute(prog, inputs, params, g)


def run_mpc(prog: NodeProgram, inputs: list[list[int]],
            params: ModelParams) -> RunResult:
    """MPC / semi-MPC: per machine and round, sent words, received words and
    the space high-water mark must each stay within the space budget s."""
    if params.kind not in (ModelKind.MPC, ModelKind.SEMI_MPC):
        raise EngineContractError("run_mpc requires MPC or SEMI_MPC params")
    if len(inputs) != params.p:
        raise EngineContractError(
            f"expected {params.p} machine inputs, got {len(inputs)}")
    total = sum(len(words) for words in inputs)
    if params.ell and total != params.ell:
        raise EngineContractError(
            f"inputs hold {total} words but params declare ell={params.ell}")
    for i, words in enumerate(inputs):
        if len(words) > params.s:
            raise EngineContractError(
                f"machine {i} initial input of {len(words)} words exceeds s={params.s}")
    return _execute(prog, [tuple(w) for w in inputs], params, None)
