"""Cross-model simulation adapters.

Each adapter wraps a source-model node program into a target-model node
program, runs both, and certifies the expected round, machine, traffic and
memory bounds on the resulting traces:

  * simulate_cc_on_semimpc:  clique algorithm -> semi-MPC, n machines, one
    extra round to redistribute the arbitrarily placed edges.
  * simulate_semimpc_on_cc:  semi-MPC algorithm -> clique; every round's
    message load is delivered by a two-phase routing schedule.
  * simulate_congest_on_semimpc:  CONGEST algorithm -> semi-MPC with few
    machines; three setup rounds collect degrees, assign vertices to machines
    by sorted round-robin, and ship every edge to its simulating machines.

Simulated runs reproduce the native outputs word for word; anything that
cannot be simulated faithfully (a broken hypothesis, an unclean native run)
is refused rather than approximated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Graph, Message, pack_fields, unpack_fields
from .engines import (
    ModelKind,
    ModelParams,
    NodeProgram,
    RunResult,
    distribute_edges,
    run_clique,
    run_congest,
    run_mpc,
)
from .routing import DemandMatrix, Schedule, plan_routing


class SimulationRefused(RuntimeError):
    """The adapter's hypothesis does not hold for this program and input."""


@dataclass(frozen=True)
class Assignment:
    """Vertex-to-machine map produced by sorted round-robin balancing."""

    machine_of: tuple[int, ...]
    machine_vertices: tuple[tuple[int, ...], ...]
    machine_loads: tuple[int, ...]

    @property
    def machines(self) -> int:
        return len(self.machine_vertices)

    @property
    def max_load(self) -> int:
        return max(self.machine_loads, default=0)


def load_bound_ok(assignment: Assignment, degrees, c_load: int) -> bool:
    """max degree-load <= c_load * max(sum(degrees)/machines, max degree).

    Round-robin over the descending degree order guarantees this with
    c_load = 2: a machine's first pick is at most the overall maximum degree
    and every later pick is dominated by the running average.  Compared
    integer-exactly (both sides scaled by the machine count).
    """
    total = sum(degrees)
    dmax = max(degrees, default=0)
    lhs = assignment.max_load * assignment.machines
    rhs = c_load * max(total, dmax * assignment.machines)
    return lhs <= rhs


def compute_node_assignment(degrees, machines: int) -> Assignment:
    """Sort vertices by degree descending (ties by ascending id) and deal
    them round-robin: the vertex at sorted position i goes to machine
    i mod machines."""
    if machines < 1:
        raise ValueError("need at least one machine")
    n = len(degrees)
    order = sorted(range(n), key=lambda v: (-degrees[v], v))
    machine_of = [0] * n
    vertices: list[list[int]] = [[] for _ in range(machines)]
    loads = [0] * machines
    for i, v in enumerate(order):
        a = i % machines
        machine_of[v] = a
        vertices[a].append(v)
        loads[a] += degrees[v]
    return Assignment(
        machine_of=tuple(machine_of),
        machine_vertices=tuple(tuple(sorted(vs)) for vs in vertices),
        machine_loads=tuple(loads),
    )


@dataclass
class SimulationReport:
    """Native and simulated evidence plus the verdicts on every claimed bound."""

    source_model: str
    target_model: str
    native: RunResult
    simulated: RunResult
    bound_checks: dict[str, bool]
    measured_constants: dict
    extra: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return all(self.bound_checks.values())

    def to_json_dict(self) -> dict:
        doc = {
            "source_model": self.source_model,
            "target_model": self.target_model,
            "bound_checks": dict(self.bound_checks),
            "measured_constants": dict(self.measured_constants),
            "native": self.native.to_json_dict(),
            "simulated": self.simulated.to_json_dict(),
        }
        doc.update(self.extra)
        return doc


# ---------------------------------------------------------------------------
# Clique -> semi-MPC
# ---------------------------------------------------------------------------

class _CliqueOnSemiMpc(NodeProgram):
    """Machine i hosts clique node i.

    Round 1 redistributes the arbitrarily placed edges: for every stored edge
    (u, v) the holder sends one word naming the other endpoint to u's machine
    and to v's machine, then drops its store.  From round 2 on the machine
    rebuilds the node's incident edge list, brings the node program up, and
    replays it verbatim: simulated round r+1 is native round r.
    """

    def __init__(self, inner: NodeProgram, n: int):
        self.inner = inner
        self.n = n

    def init(self, pid: int, input_words):
        words = list(input_words)
        edges = tuple((words[i], words[i + 1]) for i in range(0, len(words), 2))
        # state: (pid, native round about to run, stored edges, node state)
        return (pid, 0, edges, None)

    def on_round(self, state, inbox):
        pid, native_round, stored, node_state = state

        if native_round == 0:
            notify: dict[int, list[int]] = {}
            for u, v in stored:
                notify.setdefault(u, []).append(v)
                notify.setdefault(v, []).append(u)
            outbox = [Message(src=pid, dst=w, payload=tuple(sorted(others)))
                      for w, others in sorted(notify.items())]
            return (pid, 1, (), None), outbox, False

        if native_round == 1:
            incident = tuple(sorted(
                (min(pid, w), max(pid, w))
                for msg in inbox for w in msg.payload))
            node_state = self.inner.init(pid, incident)
            if self.inner.immediate_halt:
                return (pid, 2, (), node_state), [], True
            node_state, outbox, halt = self.inner.on_round(node_state, [])
            return (pid, 2, (), node_state), list(outbox), halt

        replayed = [Message(src=m.src, dst=m.dst, payload=m.payload,
                            round=native_round - 1) for m in inbox]
        node_state, outbox, halt = self.inner.on_round(node_state, replayed)
        return (pid, native_round + 1, (), node_state), list(outbox), halt

    def output(self, state):
        node_state = state[3]
        return self.inner.output(node_state) if node_state is not None else []


def simulate_cc_on_semimpc(prog: NodeProgram, g: Graph,
                           clique_params: ModelParams | None = None, *,
                           c_space: int = 4, c_traffic: int = 4,
                           seed: int = 0,
                           initial_edges: list[list[tuple[int, int]]] | None = None,
                           ) -> SimulationReport:
    """Simulate a clique algorithm on semi-MPC with exactly n machines and
    one extra round.

    The native run must be clean and stay within c_space*n words of local
    memory per node (the hypothesis that makes machine space sufficient);
    otherwise the simulation is refused.  Edges may start on any machine as
    long as each machine holds at most c_space*n words.
    """
    n = g.n
    if clique_params is None:
        clique_params = ModelParams.clique(n, c_space=c_space, c_traffic=c_traffic)
    native = run_clique(prog, g, clique_params)
    if not native.clean:
        raise SimulationRefused(
            f"native clique run violated its own model: {native.violations[0]}")

    space_budget = c_space * n
    peaks = native.trace.space_high_water()
    worst = max(peaks, default=0)
    if worst > space_budget:
        raise SimulationRefused(
            f"native node memory {worst} words exceeds the {space_budget}-word"
            " hypothesis; simulation refused")

    if initial_edges is None:
        inputs = distribute_edges(g, n, seed)
    else:
        inputs = [[w for (u, v) in machine_edges for w in (u, v)]
                  for machine_edges in initial_edges]
        if len(inputs) != n:
            raise SimulationRefused(f"initial placement must cover {n} machines")
    for i, words in enumerate(inputs):
        if len(words) > space_budget:
            raise SimulationRefused(
                f"machine {i} starts with {len(words)} words, above {space_budget}")

    semi = ModelParams.semi_mpc(
        n, p=n, ell=2 * g.m, word_width_bits=clique_params.word_width_bits,
        c_space=c_space, c_traffic=c_traffic,
        round_cap=native.rounds_used + 10).with_min_delta()

    sim = run_mpc(_CliqueOnSemiMpc(prog, n), inputs, semi)

    t_native = native.rounds_used
    expected = t_native + 1 if t_native >= 1 else 2
    sim_peaks = sim.trace.space_high_water()
    max_traffic = sim.trace.max_traffic()
    bound_checks = {
        "rounds_ok": sim.rounds_used == expected,
        "rounds_big_o_ok": sim.rounds_used <= 2 * max(t_native, 1),
        "machines_ok": sim.params.p == n,
        "traffic_ok": sim.clean and max_traffic <= c_traffic * n,
        "space_ok": sim.clean and max(sim_peaks, default=0) <= space_budget,
        "outputs_ok": sim.outputs == native.outputs,
    }
    measured = {
        "native_rounds": t_native,
        "simulated_rounds": sim.rounds_used,
        "machines": sim.params.p,
        "max_traffic_words": max_traffic,
        "traffic_per_n": max_traffic / n,
        "max_space_words": max(sim_peaks, default=0),
        "space_per_n": max(sim_peaks, default=0) / n,
        "delta": sim.params.delta,
    }
    return SimulationReport(
        source_model=ModelKind.CLIQUE.value,
        target_model=ModelKind.SEMI_MPC.value,
        native=native, simulated=sim,
        bound_checks=bound_checks, measured_constants=measured,
    )


# ---------------------------------------------------------------------------
# Semi-MPC -> clique
# ---------------------------------------------------------------------------

class _RecordingProgram(NodeProgram):
    """Delegates to a program while logging every outbox, so an adapter can
    plan message delivery from a dry run.  Relies on the engine calling
    on_round participant-by-participant in id order within each round."""

    def __init__(self, inner: NodeProgram, p: int):
        self.inner = inner
        self.p = p
        self.immediate_halt = inner.immediate_halt
        self.calls = 0
        self.log: list[list[list[Message]]] = []

    def init(self, pid, local_input):
        return self.inner.init(pid, local_input)

    def on_round(self, state, inbox):
        pid = self.calls % self.p
        if pid == 0:
            self.log.append([[] for _ in range(self.p)])
        self.calls += 1
        state, outbox, halt = self.inner.on_round(state, inbox)
        self.log[-1][pid] = list(outbox)
        return state, outbox, halt

    def output(self, state):
        return self.inner.output(state)


@dataclass(frozen=True)
class _Episode:
    """One semi-MPC round's worth of routed traffic on the clique."""

    native_round: int
    base: int              # first engine round of this episode
    schedule: Schedule
    streams: dict          # (src, dst) -> tuple of (value, starts_message)

    @property
    def rounds(self) -> int:
        return self.schedule.num_rounds

    @property
    def end(self) -> int:
        return self.base + self.rounds - 1

    def phase_of(self, engine_round: int) -> str:
        if self.base <= engine_round < self.base + self.schedule.phase_a_rounds:
            return "A"
        return "B"


class _SemiMpcOnClique(NodeProgram):
    """Clique node i < p hosts machine i; nodes p..n-1 only relay.

    Every semi-MPC round with cross-machine traffic becomes one routing
    episode.  At an episode's first engine round the hosted machine catches
    up through the native rounds up to and including the episode's round
    (intervening rounds sent nothing between machines), emitting its words
    into the episode's scheduled phase-A slots; relay nodes forward them in
    their phase-B slots.  Each transferred word packs (counterpart, sequence,
    value, starts-message flag) so receivers can reassemble the original
    multi-word messages in canonical order.  One trailing engine round
    absorbs the final deliveries; remaining native rounds are message-free
    and are drained when outputs are read.
    """

    def __init__(self, inner: NodeProgram, p: int, n: int, native_rounds: int,
                 episodes: list[_Episode], widths: tuple[int, int, int, int],
                 machine_inputs: list):
        self.inner = inner
        self.p = p
        self.n = n
        self.native_rounds = native_rounds
        self.episodes = episodes
        self.widths = widths
        self.machine_inputs = [tuple(words) for words in machine_inputs]
        self.total_rounds = (episodes[-1].end + 1) if episodes else 0
        self.immediate_halt = self.total_rounds == 0
        self.by_base = {ep.base: ep for ep in episodes}
        self.phase_table = {}
        for idx, ep in enumerate(episodes):
            for r in range(ep.base, ep.end + 1):
                self.phase_table[r] = (idx, ep.phase_of(r))

    def init(self, pid, local_input):
        # the clique's own local input (placeholder graph) is irrelevant: the
        # hosted machine starts from its semi-MPC input words
        machine_state = (self.inner.init(pid, self.machine_inputs[pid])
                         if pid < self.p else None)
        # state: (pid, engine round, machine state, next native round,
        #         arrivals target round, arrivals, self-inbox target round,
        #         self-inbox payloads, to-forward, outgoing)
        return (pid, 1, machine_state, 1, 0, (), 0, (), (), ())

    # -- native-round helpers ------------------------------------------------

    def _reconstruct(self, pid, arrivals, self_msgs, native_round):
        messages = []
        by_src: dict[int, list] = {}
        for src, seq, value, flag in arrivals:
            by_src.setdefault(src, []).append((seq, value, flag))
        for src in sorted(by_src):
            entries = sorted(by_src[src])
            for expect, (seq, _value, _flag) in enumerate(entries):
                if seq != expect:
                    raise RuntimeError("routing lost or duplicated a word")
            payload: list[int] = []
            for seq, value, flag in entries:
                if flag and payload:
                    messages.append(Message(src=src, dst=pid,
                                            payload=tuple(payload),
                                            round=native_round - 1))
                    payload = []
                payload.append(value)
            if payload:
                messages.append(Message(src=src, dst=pid,
                                        payload=tuple(payload),
                                        round=native_round - 1))
        for payload in self_msgs:
            messages.append(Message(src=pid, dst=pid, payload=payload,
                                    round=native_round - 1))
        messages.sort(key=lambda m: m.src)
        return messages

    def _advance(self, pid, machine_state, next_native, arrivals_target,
                 arrivals, self_target, self_msgs, until, episode):
        """Run native rounds next_native..until; returns the new machine
        bookkeeping plus the outgoing slot list for the episode (if any)."""
        outgoing = []
        for r in range(next_native, until + 1):
            inbox = []
            if arrivals and arrivals_target == r:
                inbox = self._reconstruct(pid, arrivals, self_msgs
                                          if self_target == r else (), r)
                arrivals = ()
            elif self_target == r and self_msgs:
                inbox = self._reconstruct(pid, (), self_msgs, r)
            if self_target == r:
                self_msgs = ()
            machine_state, outbox, _halt = self.inner.on_round(machine_state, inbox)
            new_self = []
            seq_per_dst: dict[int, int] = {}
            for m in outbox:
                if m.dst == pid:
                    new_self.append(tuple(m.payload))
                    continue
                if episode is None or r != episode.native_round:
                    raise RuntimeError(
                        "dry run and live run disagree about message rounds")
                for j, value in enumerate(m.payload):
                    seq = seq_per_dst.get(m.dst, 0)
                    seq_per_dst[m.dst] = seq + 1
                    mid, ra, rb = episode.schedule.assignment[(pid, m.dst, seq)]
                    outgoing.append((episode.base + ra - 1, mid, m.dst, seq,
                                     value, 1 if j == 0 else 0))
            if new_self:
                self_msgs, self_target = tuple(new_self), r + 1
        # cross-check the live words against the dry run for this episode
        if episode is not None:
            live = {}
            for _ra, _mid, dst, seq, value, flag in outgoing:
                live.setdefault((pid, dst), []).append((seq, value, flag))
            for (src, dst), entries in live.items():
                recorded = episode.streams.get((src, dst))
                got = tuple((v, f) for _q, v, f in sorted(entries))
                if recorded != got:
                    raise RuntimeError("dry run and live run diverged")
            for (src, dst) in episode.streams:
                if src == pid and (src, dst) not in live:
                    raise RuntimeError("dry run and live run diverged")
        return machine_state, until + 1, arrivals_target, arrivals, \
            self_target, self_msgs, tuple(outgoing)

    def on_round(self, state, inbox):
        (pid, round_no, machine_state, next_native, arrivals_target, arrivals,
         self_target, self_msgs, to_forward, outgoing) = state

        new_arrivals = list(arrivals)
        forward = list(to_forward)
        for msg in inbox:
            ep_idx, phase = self.phase_table[msg.round]
            ep = self.episodes[ep_idx]
            for word in msg.payload:
                counterpart, seq, value, flag = unpack_fields(word, self.widths)
                if phase == "A":
                    _mid, _ra, rb = ep.schedule.assignment[(msg.src, counterpart, seq)]
                    forward.append((ep.base + rb - 1, counterpart, msg.src,
                                    seq, value, flag))
                else:
                    new_arrivals.append((counterpart, seq, value, flag))
        if new_arrivals and not arrivals:
            # deliveries of episode ep feed the following native round
            ep_idx, _phase = self.phase_table[inbox[0].round]
            arrivals_target = self.episodes[ep_idx].native_round + 1

        episode = self.by_base.get(round_no)
        if episode is not None and pid < self.p:
            (machine_state, next_native, arrivals_target, new_arrivals_t,
             self_target, self_msgs, fresh) = self._advance(
                pid, machine_state, next_native, arrivals_target,
                tuple(new_arrivals), self_target, self_msgs,
                episode.native_round, episode)
            new_arrivals = list(new_arrivals_t)
            outgoing = outgoing + fresh

        outbox = []
        keep_out = []
        for ra, mid, dst, seq, value, flag in outgoing:
            if ra == round_no:
                word = pack_fields((dst, seq, value, flag), self.widths)
                outbox.append(Message(src=pid, dst=mid, payload=(word,)))
            else:
                keep_out.append((ra, mid, dst, seq, value, flag))
        keep_fwd = []
        for rb, dst, src, seq, value, flag in forward:
            if rb == round_no:
                word = pack_fields((src, seq, value, flag), self.widths)
                outbox.append(Message(src=pid, dst=dst, payload=(word,)))
            else:
                keep_fwd.append((rb, dst, src, seq, value, flag))

        halt = round_no >= self.total_rounds
        new_state = (pid, round_no + 1, machine_state, next_native,
                     arrivals_target, tuple(new_arrivals), self_target,
                     self_msgs, tuple(keep_fwd), tuple(keep_out))
        return new_state, outbox, halt

    def output(self, state):
        (pid, _round_no, machine_state, next_native, arrivals_target, arrivals,
         self_target, self_msgs, _fwd, _out) = state
        if pid >= self.p:
            return []
        if next_native <= self.native_rounds:
            machine_state, *_rest = self._advance(
                pid, machine_state, next_native, arrivals_target, arrivals,
                self_target, self_msgs, self.native_rounds, None)
        return self.inner.output(machine_state)


def simulate_semimpc_on_cc(prog: NodeProgram, inputs: list[list[int]],
                           params: ModelParams, *,
                           surcharge: int = 2) -> SimulationReport:
    """Simulate a semi-MPC algorithm on the n-node congested clique.

    Machines map to clique nodes 0..p-1.  Each semi-MPC round's messages form
    a demand matrix (every machine sends and receives at most s = O(n) words
    in a clean run, so the routing precondition holds) that is planned and
    replayed as a routing episode.  The clique run must stay within
    (2 + surcharge) * T rounds; the surcharge covers the bookkeeping a
    distributed schedule computation would add on top of the two delivery
    phases per round.
    """
    if params.kind != ModelKind.SEMI_MPC:
        raise SimulationRefused("source program must run under SEMI_MPC params")
    n = params.n
    p = params.p
    if p > n:
        raise SimulationRefused("need p <= n to map machines onto clique nodes")

    recorder = _RecordingProgram(prog, p)
    native = run_mpc(recorder, inputs, params)
    if not native.clean:
        raise SimulationRefused(
            f"native semi-MPC run violated its own model: {native.violations[0]}")
    t_native = native.rounds_used

    episodes: list[_Episode] = []
    base = 1
    max_seq = 0
    for r in range(1, t_native + 1):
        streams: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for src in range(p):
            for m in recorder.log[r - 1][src]:
                if m.dst == src:
                    continue
                stream = streams.setdefault((src, m.dst), [])
                stream.extend((w, 1 if j == 0 else 0)
                              for j, w in enumerate(m.payload))
        if not streams:
            continue
        counts = [[0] * n for _ in range(n)]
        for (src, dst), words in streams.items():
            counts[src][dst] = len(words)
            max_seq = max(max_seq, len(words) - 1)
        dm = DemandMatrix.from_rows(counts)
        schedule = plan_routing(dm, c_traffic=params.c_traffic)
        episodes.append(_Episode(
            native_round=r, base=base, schedule=schedule,
            streams={k: tuple(v) for k, v in streams.items()}))
        base += schedule.num_rounds

    w_id = max(1, (n - 1).bit_length())
    w_seq = max(1, max_seq.bit_length())
    widths = (w_id, w_seq, params.word_width_bits, 1)
    total = (episodes[-1].end + 1) if episodes else 0
    clique_params = ModelParams.clique(
        n, word_width_bits=sum(widths),
        c_space=params.c_space, c_traffic=params.c_traffic,
        round_cap=total + 5)

    wrapper = _SemiMpcOnClique(prog, p, n, t_native, episodes, widths, inputs)
    sim = run_clique(wrapper, Graph(n=n, edges=()), clique_params)

    allowed = (2 + surcharge) * t_native
    outputs_ok = (sim.outputs is not None
                  and sim.outputs[:p] == native.outputs
                  and all(not o for o in sim.outputs[p:]))
    bound_checks = {
        "rounds_ok": sim.rounds_used <= allowed,
        "machines_ok": sim.params.p == n,
        "traffic_ok": sim.clean,
        "space_ok": sim.clean,
        "outputs_ok": outputs_ok,
    }
    measured = {
        "native_rounds": t_native,
        "clique_rounds": sim.rounds_used,
        "allowed_rounds": allowed,
        "surcharge": surcharge,
        "episodes": len(episodes),
        "rounds_per_native_round": sim.rounds_used / t_native if t_native else 0.0,
        "max_space_words": max(sim.trace.space_high_water(), default=0),
    }
    return SimulationReport(
        source_model=ModelKind.SEMI_MPC.value,
        target_model=ModelKind.CLIQUE.value,
        native=native, simulated=sim,
        bound_checks=bound_checks, measured_constants=measured,
        extra={"episode_rounds": [[ep.native_round, ep.rounds] for ep in episodes]},
    )


# ---------------------------------------------------------------------------
# CONGEST -> semi-MPC
# ---------------------------------------------------------------------------

_TAG_DEGREE = 0   # (vertex, partial degree, 0)        holders -> sorter
_TAG_VERTEX = 1   # (vertex, 0, 0)                     sorter -> simulator
_TAG_MAP = 2      # (vertex, machine of vertex, 0)     sorter -> holder
_TAG_EDGE = 3     # (u, v, extra)  edge delivery: extra = machine of v
                  #                replay:        extra = the message word


class _CongestOnSemiMpc(NodeProgram):
    """Simulate many CONGEST nodes per machine.

    Three setup rounds precede the replay:

      1. every machine counts, per vertex, the edges it initially stores and
         reports these partial degrees to machine 0 (one packed word each);
      2. machine 0 sums the degrees, computes the sorted round-robin vertex
         assignment, and answers each reporting holder with the machine
         location of every endpoint the holder mentioned;
      3. holders forward each stored edge to the machines simulating its two
         endpoints, bundling the neighbor's location for later addressing,
         while machine 0 ships every machine its vertex slice.

    Replay round r then runs in engine round r+3: each machine feeds its
    vertices' inboxes, applies the node transition, and routes the outgoing
    one-word edge messages to the owning machines (same-machine traffic stays
    internal and costs nothing).
    """

    def __init__(self, inner: NodeProgram, n: int, machines: int,
                 widths: tuple[int, int, int, int], edgeless: bool = False):
        self.inner = inner
        self.n = n
        self.machines = machines
        self.widths = widths
        # no edges: nothing to count or ship, one machine replays everything
        self.edgeless = edgeless
        self.immediate_halt = edgeless and inner.immediate_halt

    def _pack(self, tag, a, b, c=0):
        return pack_fields((tag, a, b, c), self.widths)

    def init(self, pid, input_words):
        if self.edgeless:
            # replay-only state: (round no, per-vertex node states, internal)
            return (1, tuple(self.inner.init(v, ()) for v in range(self.n)), ())
        words = list(input_words)
        stored = tuple((words[i], words[i + 1]) for i in range(0, len(words), 2))
        # state: (pid, engine round, stored edges, my vertices,
        #         {remote vertex: host machine}, {my vertex: node state},
        #         internal messages)
        return (pid, 1, stored, (), {}, {}, ())

    def _on_round_edgeless(self, state, inbox):
        round_no, node_states, internal = state
        per_vertex: dict[int, list[tuple[int, int]]] = {}
        for src_v, dst_v, value in internal:
            per_vertex.setdefault(dst_v, []).append((src_v, value))
        halt = False
        new_states = []
        new_internal = []
        for v, nstate in enumerate(node_states):
            node_inbox = [Message(src=u, dst=v, payload=(value,),
                                  round=round_no - 1)
                          for u, value in sorted(per_vertex.get(v, ()))]
            nstate, outbox, node_halt = self.inner.on_round(nstate, node_inbox)
            new_states.append(nstate)
            halt = halt or node_halt
            # a single machine hosts every vertex, so all traffic is internal
            new_internal.extend((v, m.dst, m.payload[0]) for m in outbox)
        return (round_no + 1, tuple(new_states), tuple(new_internal)), [], halt

    def on_round(self, state, inbox):
        if self.edgeless:
            return self._on_round_edgeless(state, inbox)

        (pid, round_no, stored, mine, location, node_states, internal) = state

        if round_no == 1:
            # the sorter keeps its own counts local instead of self-mailing
            outbox = []
            if pid != 0 and stored:
                partial: dict[int, int] = {}
                for u, v in stored:
                    partial[u] = partial.get(u, 0) + 1
                    partial[v] = partial.get(v, 0) + 1
                payload = tuple(self._pack(_TAG_DEGREE, v, d)
                                for v, d in sorted(partial.items()))
                outbox.append(Message(src=pid, dst=0, payload=payload))
            return (pid, 2, stored, mine, location, node_states, ()), outbox, False

        if round_no == 2:
            # sorter round: sum partial degrees, fix the assignment, answer
            # each reporting holder with the machine of every endpoint it
            # mentioned (the vertex slices follow next round, which keeps the
            # sorter's per-round send volume within budget)
            outbox = []
            slices = ()
            if pid == 0:
                degrees = [0] * self.n
                reported: dict[int, list[int]] = {}
                for u, v in stored:
                    degrees[u] += 1
                    degrees[v] += 1
                for msg in inbox:
                    for word in msg.payload:
                        tag, v, d, _x = unpack_fields(word, self.widths)
                        if tag != _TAG_DEGREE:
                            raise RuntimeError("unexpected word during setup")
                        degrees[v] += d
                        reported.setdefault(msg.src, []).append(v)
                assignment = compute_node_assignment(degrees, self.machines)
                for holder in sorted(reported):
                    maps = tuple(self._pack(_TAG_MAP, v, assignment.machine_of[v])
                                 for v in sorted(set(reported[holder])))
                    if maps:
                        outbox.append(Message(src=0, dst=holder, payload=maps))
                # remember the endpoint machines of the locally stored edges,
                # one packed word per endpoint
                location = tuple(sorted(
                    self._pack(_TAG_MAP, w, assignment.machine_of[w])
                    for w in {x for e in stored for x in e}))
                slices = assignment.machine_vertices
            return (pid, 3, stored, slices, location, node_states, ()), outbox, False

        if round_no == 3:
            # holders ship each edge to the machines simulating its endpoints;
            # the sorter ships every machine its vertex slice in parallel
            endpoint_machine: dict[int, int] = {}
            for word in location:  # the sorter's own stash of packed maps
                _tag, a, b, _x = unpack_fields(word, self.widths)
                endpoint_machine[a] = b
            for msg in inbox:
                for word in msg.payload:
                    tag, a, b, _x = unpack_fields(word, self.widths)
                    if tag != _TAG_MAP:
                        raise RuntimeError("unexpected word during setup")
                    endpoint_machine[a] = b
            outbox = []
            if pid == 0:
                for a, vertices in enumerate(mine):  # mine holds the slices
                    words = tuple(self._pack(_TAG_VERTEX, v, 0)
                                  for v in vertices)
                    if words:
                        outbox.append(Message(src=0, dst=a, payload=words))
            by_machine: dict[int, list[int]] = {}
            for u, v in stored:
                by_machine.setdefault(endpoint_machine[u], []).append(
                    self._pack(_TAG_EDGE, u, v, endpoint_machine[v]))
                by_machine.setdefault(endpoint_machine[v], []).append(
                    self._pack(_TAG_EDGE, v, u, endpoint_machine[u]))
            for target in sorted(by_machine):
                outbox.append(Message(src=pid, dst=target,
                                      payload=tuple(sorted(by_machine[target]))))
            return (pid, 4, (), (), {}, node_states, ()), outbox, False

        if round_no == 4:
            my_vertices = []
            arrivals = []
            for msg in inbox:
                for word in msg.payload:
                    tag, a, b, extra = unpack_fields(word, self.widths)
                    if tag == _TAG_VERTEX:
                        my_vertices.append(a)
                    elif tag == _TAG_EDGE:
                        arrivals.append((a, b, extra))
                    else:
                        raise RuntimeError("unexpected word during setup")
            mine = tuple(sorted(my_vertices))
            neighbor_lists: dict[int, list[int]] = {v: [] for v in mine}
            remote: dict[int, int] = {}
            for u, v, host in arrivals:
                neighbor_lists[u].append(v)
                if host != pid:
                    remote[v] = host
            # one packed word per remote neighbor's (vertex, machine) pair
            location = tuple(sorted(self._pack(_TAG_MAP, v, host)
                                    for v, host in remote.items()))
            node_states = {
                v: self.inner.init(
                    v, tuple(sorted((min(v, u), max(v, u))
                                    for u in neighbor_lists[v])))
                for v in mine
            }
            if self.inner.immediate_halt:
                return (pid, 5, (), mine, location, node_states, ()), [], True
            return self._replay(pid, 5, mine, location, node_states, (), [],
                                native_round=1)

        native_round = round_no - 3
        return self._replay(pid, round_no + 1, mine, location, node_states,
                            internal, inbox, native_round=native_round)

    def _replay(self, pid, next_round_no, mine, location, node_states,
                internal, inbox, native_round):
        per_vertex: dict[int, list[tuple[int, int]]] = {v: [] for v in mine}
        for src_v, dst_v, value in internal:
            per_vertex[dst_v].append((src_v, value))
        for msg in inbox:
            for word in msg.payload:
                tag, src_v, dst_v, value = unpack_fields(word, self.widths)
                if tag != _TAG_EDGE:
                    raise RuntimeError("unexpected word during replay")
                per_vertex[dst_v].append((src_v, value))

        remote: dict[int, int] = {}
        for word in location:
            _tag, v, host, _x = unpack_fields(word, self.widths)
            remote[v] = host

        node_states = dict(node_states)
        new_internal = []
        by_machine: dict[int, list[int]] = {}
        halt = False
        for v in mine:
            node_inbox = [Message(src=u, dst=v, payload=(value,),
                                  round=native_round - 1)
                          for u, value in sorted(per_vertex[v])]
            nstate, outbox, node_halt = self.inner.on_round(node_states[v],
                                                            node_inbox)
            node_states[v] = nstate
            halt = halt or node_halt
            for m in outbox:
                value = m.payload[0]
                # anything not recorded as remote lives on this machine
                host = remote.get(m.dst, pid)
                if host == pid:
                    new_internal.append((v, m.dst, value))
                else:
                    by_machine.setdefault(host, []).append(
                        self._pack(_TAG_EDGE, v, m.dst, value))
        machine_outbox = [
            Message(src=pid, dst=target, payload=tuple(sorted(words)))
            for target, words in sorted(by_machine.items())
        ]
        state = (pid, next_round_no, (), mine, location, node_states,
                 tuple(new_internal))
        return state, machine_outbox, halt

    def output(self, state):
        if self.edgeless:
            _round_no, node_states, _internal = state
            items = list(enumerate(node_states))
        else:
            (_pid, _round_no, _stored, mine, _location, node_states,
             _internal) = state
            items = [(v, node_states[v]) for v in mine]
        out: list[int] = []
        for v, nstate in items:
            words = self.inner.output(nstate)
            out.append(v)
            out.append(len(words))
            out.extend(words)
        return out


def _congest_memory_hypothesis(native: RunResult, g: Graph,
                               c_space: int) -> tuple[bool, int, float]:
    """Per-node memory must stay linear in what the node receives (plus its
    own edge list): high-water <= c_space * (received + degree) + 8 words."""
    worst_ratio = 0.0
    ok = True
    worst_v = -1
    recv = [0] * g.n
    for rec in native.trace.rounds:
        for _s, d, w in rec.transfers:
            recv[d] += w
    peaks = native.trace.space_high_water()
    for v in range(g.n):
        allowed = c_space * (recv[v] + g.degrees[v]) + 8
        ratio = peaks[v] / allowed if allowed else 0.0
        if ratio > worst_ratio:
            worst_ratio, worst_v = ratio, v
        if peaks[v] > allowed:
            ok = False
    return ok, worst_v, worst_ratio


def simulate_congest_on_semimpc(prog: NodeProgram, g: Graph,
                                round_budget: int | None = None,
                                congest_params: ModelParams | None = None, *,
                                c_space: int = 4, c_traffic: int = 4,
                                c_machines: int = 2, c_load: int = 2,
                                seed: int = 0,
                                initial_edges: list[list[tuple[int, int]]] | None = None,
                                ) -> SimulationReport:
    """Simulate a CONGEST algorithm on semi-MPC using few machines.

    The machine count is ceil(c_machines * T * m / n) capped at n (and at
    least 1), where T is the round budget (defaults to the native round
    count).  Refused when the program's native memory use is not linear in
    what each node receives, since machine space could then overflow.
    The simulation takes at most max(T, 1) + 3 rounds: three setup rounds
    plus the replay.
    """
    n = g.n
    if congest_params is None:
        congest_params = ModelParams.congest(n, c_space=c_space,
                                             c_traffic=c_traffic)
    native = run_congest(prog, g, congest_params)
    if not native.clean:
        raise SimulationRefused(
            f"native CONGEST run violated its own model: {native.violations[0]}")
    t_native = native.rounds_used
    t_budget = round_budget if round_budget is not None else t_native
    if t_budget < t_native:
        raise SimulationRefused(
            f"round budget {t_budget} below the native round count {t_native}")

    mem_ok, worst_v, worst_ratio = _congest_memory_hypothesis(native, g, c_space)
    if not mem_ok:
        raise SimulationRefused(
            f"node {worst_v} uses memory {worst_ratio:.2f}x beyond linear in"
            " its received words; simulation refused")

    machines = min(max(1, -(-c_machines * t_budget * g.m // n)), n)

    if initial_edges is None:
        inputs = distribute_edges(g, machines, seed)
    else:
        inputs = [[w for (u, v) in machine_edges for w in (u, v)]
                  for machine_edges in initial_edges]
        if len(inputs) != machines:
            raise SimulationRefused(
                f"initial placement must cover {machines} machines")

    w_id = max(1, (n - 1).bit_length())
    widths = (2, w_id, w_id, congest_params.word_width_bits)
    semi = ModelParams.semi_mpc(
        n, p=machines, ell=2 * g.m, word_width_bits=sum(widths),
        c_space=c_space, c_traffic=c_traffic,
        round_cap=t_native + 10).with_min_delta()

    wrapper = _CongestOnSemiMpc(prog, n, machines, widths, edgeless=g.m == 0)
    sim = run_mpc(wrapper, inputs, semi)

    # unpack per-node outputs from the per-machine word streams
    sim_node_outputs: dict[int, list[int]] | None = None
    if sim.outputs is not None:
        sim_node_outputs = {}
        for words in sim.outputs:
            i = 0
            while i < len(words):
                v, count = words[i], words[i + 1]
                sim_node_outputs[v] = list(words[i + 2:i + 2 + count])
                i += 2 + count

    assignment = compute_node_assignment(g.degrees, machines)
    dmax = max(g.degrees, default=0)
    machines_allowed = min(max(1, -(-2 * t_budget * g.m // n)), n)
    outputs_ok = (sim_node_outputs is not None
                  and native.outputs is not None
                  and sim_node_outputs == {v: native.outputs[v] for v in range(n)})
    sim_peaks = sim.trace.space_high_water()
    bound_checks = {
        "rounds_ok": sim.rounds_used <= max(t_native, 1) + 3,
        "machines_ok": machines <= machines_allowed,
        "load_ok": load_bound_ok(assignment, g.degrees, c_load),
        "traffic_ok": sim.clean,
        "space_ok": sim.clean and max(sim_peaks, default=0) <= c_space * n,
        "outputs_ok": outputs_ok,
    }
    high_degree_flag = dmax * t_budget > n
    measured = {
        "native_rounds": t_native,
        "round_budget": t_budget,
        "simulated_rounds": sim.rounds_used,
        "machines": machines,
        "max_degree_load": assignment.max_load,
        "max_degree": dmax,
        "max_traffic_words": sim.trace.max_traffic(),
        "max_space_words": max(sim_peaks, default=0),
        "space_per_n": max(sim_peaks, default=0) / n,
        "delta": sim.params.delta,
    }
    return SimulationReport(
        source_model=ModelKind.CONGEST.value,
        target_model=ModelKind.SEMI_MPC.value,
        native=native, simulated=sim,
        bound_checks=bound_checks, measured_constants=measured,
        extra={
            "high_degree_flag": high_degree_flag,
            "assignment": list(assignment.machine_of),
        },
    )
