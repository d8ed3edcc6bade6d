import pytest

from distsim import (
    EngineContractError,
    Graph,
    Message,
    ModelKind,
    ModelParams,
    NodeProgram,
    RoundLimitError,
    check_trace,
    gen_graph,
    run_clique,
    run_congest,
    run_mpc,
    words_in,
)

from conftest import random_graph


class SendIdToZero(NodeProgram):
    """Every node sends its id to node 0 once, then everyone halts."""

    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        outbox = []
        if state != 0:
            outbox.append(Message(src=state, dst=0, payload=(state,)))
        return state, outbox, True

    def output(self, state):
        return [state]


class Blaster(NodeProgram):
    """Node 1 sends two words to node 2 in round 1."""

    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        outbox = []
        if state == 1:
            outbox.append(Message(src=1, dst=2, payload=(0, 0)))
        return state, outbox, True

    def output(self, state):
        return []


class FixedRoundFlood(NodeProgram):
    """Min-id flooding that halts after a preset number of rounds."""

    def __init__(self, rounds):
        self.rounds = rounds

    def init(self, pid, local_input):
        nbrs = tuple(sorted(u if u != pid else v for u, v in local_input))
        return (pid, 1, pid, nbrs)

    def on_round(self, state, inbox):
        pid, r, best, nbrs = state
        for m in inbox:
            best = min(best, m.payload[0])
        halt = r >= self.rounds
        outbox = [] if halt else [Message(src=pid, dst=u, payload=(best,))
                                  for u in nbrs]
        return (pid, r + 1, best, nbrs), outbox, halt

    def output(self, state):
        return [state[2]]


class OffGraphSender(NodeProgram):
    """Node 0 talks straight to node 2, edges or not."""

    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        outbox = []
        if state == 0:
            outbox.append(Message(src=0, dst=2, payload=(7,)))
        return state, outbox, True

    def output(self, state):
        return []


class MpcShipper(NodeProgram):
    """Machine 0 ships a fixed number of words to machine 1, then halts."""

    def __init__(self, words):
        self.words = words

    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        outbox = []
        if state == 0:
            outbox.append(Message(src=0, dst=1, payload=(1,) * self.words))
        return state, outbox, True

    def output(self, state):
        return []


class NeverHalts(NodeProgram):
    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        return state, [], False

    def output(self, state):
        return []


# -- clique -------------------------------------------------------------------

def test_clique_all_to_zero():
    g = gen_graph("complete", 4)
    res = run_clique(SendIdToZero(), g)
    assert res.rounds_used == 1
    assert res.clean
    round1 = res.trace.rounds[0]
    assert round1.recv_words(0) == 3
    assert sum(1 for s, d, w in round1.transfers if d == 0) == 3


def test_clique_pair_capacity_violation():
    g = gen_graph("complete", 4)
    res = run_clique(Blaster(), g)
    assert not res.clean
    v = res.violations[0]
    assert (v.rule, v.round, v.src, v.dst) == ("pair-capacity", 1, 1, 2)
    assert res.outputs is None


def test_clique_requires_matching_params():
    g = gen_graph("path", 4)
    with pytest.raises(EngineContractError):
        run_clique(SendIdToZero(), g, ModelParams.clique(5))


# -- congest ------------------------------------------------------------------

def test_congest_flood_fixed_rounds_path():
    # messages sent in round r are readable in round r+1, so information
    # crosses the 3-path (min-vertex eccentricity 2) in 2+1 rounds
    g = gen_graph("path", 3)
    res = run_congest(FixedRoundFlood(3), g)
    assert res.rounds_used == 3
    assert res.outputs == [[0], [0], [0]]
    assert res.clean
    partial = run_congest(FixedRoundFlood(2), g)
    assert partial.outputs == [[0], [0], [1]]


def test_congest_non_edge_violation():
    g = gen_graph("path", 3)
    res = run_congest(OffGraphSender(), g)
    assert not res.clean
    v = res.violations[0]
    assert (v.rule, v.src, v.dst) == ("non-edge", 0, 2)


def test_congest_edgeless_immediate():
    g = Graph(n=3, edges=())
    res = run_congest(FixedRoundFlood(1), g)
    assert res.rounds_used == 1
    assert res.outputs == [[0], [1], [2]]


def test_congest_edge_discipline_over_corpus():
    for seed in range(20):
        g = random_graph(12, seed)
        res = run_congest(FixedRoundFlood(3), g)
        for rec in res.trace.rounds:
            for s, d, _w in rec.transfers:
                assert g.has_edge(s, d)


# -- mpc ----------------------------------------------------------------------

def _mpc_params(p=2, s=8):
    return ModelParams.mpc(p=p, s=s, ell=0)


def test_mpc_at_budget_is_clean():
    res = run_mpc(MpcShipper(8), [[], []], _mpc_params())
    assert res.clean
    assert res.trace.sent_words(0, 1) == 8


def test_mpc_over_budget_violates_with_ratio():
    res = run_mpc(MpcShipper(9), [[], []], _mpc_params())
    assert not res.clean
    v = res.violations[0]
    assert v.rule == "sent-budget"
    assert (v.measured, v.allowed) == (9, 8)
    assert v.ratio == pytest.approx(9 / 8)


def test_mpc_rejects_oversized_input():
    with pytest.raises(EngineContractError):
        run_mpc(MpcShipper(1), [[0] * 9, []], _mpc_params())


def test_mpc_rejects_bad_machine_count_law():
    params = ModelParams.mpc(p=9, s=8, ell=0)
    res = run_mpc(MpcShipper(0), [[]] * 9, params)
    assert res.rounds_used == 0
    assert res.violations[0].rule == "machine-count"


def test_mpc_total_space_law():
    params = ModelParams.mpc(p=4, s=4, ell=2, polylog_exp=0, c_total=1)
    res = run_mpc(MpcShipper(1), [[1], [1], [], []], params)
    assert any(v.rule == "total-space" for v in res.violations)


def test_semi_mpc_space_is_four_n():
    params = ModelParams.semi_mpc(10, 3, ell=0)
    assert params.s == 40
    assert params.kind == ModelKind.SEMI_MPC


# -- shared engine behavior -----------------------------------------------------

def test_round_cap_raises():
    g = gen_graph("path", 3)
    params = ModelParams.congest(3, round_cap=7)
    with pytest.raises(RoundLimitError):
        run_congest(NeverHalts(), g, params)


def test_word_overflow_rejected():
    class Wide(NodeProgram):
        def init(self, pid, local_input):
            return pid

        def on_round(self, state, inbox):
            return state, [Message(src=state, dst=(state + 1) % 3,
                                   payload=(10 ** 9,))], True

        def output(self, state):
            return []

    with pytest.raises(EngineContractError):
        run_clique(Wide(), gen_graph("complete", 3))


def test_self_messages_are_free_and_delivered():
    class SelfTalker(NodeProgram):
        def init(self, pid, local_input):
            return (pid, 1, 0)

        def on_round(self, state, inbox):
            pid, r, got = state
            for m in inbox:
                got = m.payload[0]
            if r == 1:
                return (pid, 2, got), [Message(src=pid, dst=pid,
                                               payload=(pid + 1,))], False
            return (pid, 2, got), [], True

        def output(self, state):
            return [state[2]]

    g = gen_graph("complete", 3)
    res = run_clique(SelfTalker(), g)
    assert res.outputs == [[1], [2], [3]]
    # self messages never appear as transfers
    assert all(not rec.transfers for rec in res.trace.rounds)


def test_immediate_halt_runs_zero_rounds():
    class Echo(NodeProgram):
        immediate_halt = True

        def init(self, pid, local_input):
            return pid

        def output(self, state):
            return [state]

    g = gen_graph("complete", 3)
    res = run_clique(Echo(), g)
    assert res.rounds_used == 0
    assert res.outputs == [[0], [1], [2]]
    assert res.trace.num_rounds == 0


def test_determinism_bit_identical():
    g = gen_graph("gnp", 16, prob=0.2, seed=3)
    a = run_congest(FixedRoundFlood(5), g)
    b = run_congest(FixedRoundFlood(5), g)
    assert a.to_json_dict() == b.to_json_dict()


def test_conservation_sent_equals_received():
    for seed in range(10):
        g = random_graph(10, seed)
        res = run_congest(FixedRoundFlood(4), g)
        for r in range(1, res.trace.num_rounds + 1):
            total_sent = sum(res.trace.sent_words(v, r) for v in range(g.n))
            total_recv = sum(res.trace.recv_words(v, r) for v in range(g.n))
            assert total_sent == total_recv


# -- check_trace --------------------------------------------------------------

def test_check_trace_clean_run_is_clean():
    g = gen_graph("gnp", 12, prob=0.3, seed=1)
    res = run_congest(FixedRoundFlood(4), g)
    assert res.clean
    assert check_trace(res.trace, res.params, g) == []


def test_check_trace_reproduces_engine_violation():
    g = gen_graph("complete", 4)
    res = run_clique(Blaster(), g)
    assert not res.clean
    again = check_trace(res.trace, res.params, g)
    assert again == res.violations


def test_check_trace_flags_doctored_round():
    g = gen_graph("complete", 4)
    res = run_clique(SendIdToZero(), g)
    from distsim import RoundRecord, RoundTrace
    rec = res.trace.rounds[0]
    doctored = RoundTrace(
        num_participants=4,
        rounds=(RoundRecord(transfers=rec.transfers + ((1, 0, 1),),
                            space=rec.space),))
    bad = check_trace(doctored, res.params, g)
    assert bad and bad[0].rule == "pair-capacity" and bad[0].round == 1


def test_check_trace_space_boundary():
    params = ModelParams.semi_mpc(5, 2, ell=0)
    from distsim import RoundRecord, RoundTrace
    at_budget = RoundTrace(2, (RoundRecord((), (params.s, 0)),))
    over = RoundTrace(2, (RoundRecord((), (params.s + 1, 0)),))
    assert check_trace(at_budget, params) == []
    bad = check_trace(over, params)
    assert bad and bad[0].rule == "space-budget"


# -- words_in -----------------------------------------------------------------

def test_words_in_counts_structures():
    assert words_in(5) == 1
    assert words_in(None) == 0
    assert words_in((1, 2, 3)) == 3
    assert words_in({1: (2, 3)}) == 3
    assert words_in([(1, 2), {3: 4}]) == 4


def test_words_in_rejects_opaque_state():
    with pytest.raises(TypeError):
        words_in("sneaky string")
