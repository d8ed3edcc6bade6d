import pytest

from distsim import (
    Graph,
    Message,
    ModelParams,
    NodeProgram,
    SimulationRefused,
    compute_node_assignment,
    components_oracle,
    distribute_edges,
    gen_graph,
    run_clique,
    run_congest,
    simulate_cc_on_semimpc,
    simulate_congest_on_semimpc,
    simulate_semimpc_on_cc,
    cc_boruvka_connectivity,
    congest_flood_components,
    semimpc_forest_merge_connectivity,
)
from distsim.adapters import load_bound_ok

from conftest import random_connected_graph, random_graph


# -- node assignment ------------------------------------------------------------

def test_assignment_round_robin_by_descending_degree():
    # sorted order is v0 (3), v2 (2), v3 (2), v1 (1); dealt 0, 1, 0, 1
    a = compute_node_assignment([3, 1, 2, 2], 2)
    assert a.machine_vertices == ((0, 3), (1, 2))
    assert a.machine_loads == (5, 3)
    assert a.machine_of == (0, 1, 1, 0)


def test_assignment_single_machine():
    a = compute_node_assignment([2, 2, 1], 1)
    assert a.machine_vertices == ((0, 1, 2),)
    assert a.machine_loads == (5,)


def test_assignment_more_machines_than_vertices():
    a = compute_node_assignment([1, 3, 2], 5)
    # sorted order is v1, v2, v0: position i lands alone on machine i
    assert a.machine_of == (2, 0, 1)
    assert a.machine_vertices[3] == () and a.machine_vertices[4] == ()


def test_assignment_load_bound_holds_everywhere():
    import random
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randrange(1, 40)
        degrees = [rng.randrange(0, n) for _ in range(n)]
        machines = rng.randrange(1, n + 1)
        a = compute_node_assignment(degrees, machines)
        assert load_bound_ok(a, degrees, 2)


# -- clique on semi-MPC ----------------------------------------------------------

class OutputLocalInput(NodeProgram):
    """Zero-round program: output the incident edge list."""

    immediate_halt = True

    def init(self, pid, local_input):
        return tuple(w for edge in local_input for w in edge)

    def output(self, state):
        return list(state)


class MemoryHog(NodeProgram):
    """Grossly super-linear node memory; must be refused."""

    def __init__(self, n):
        self.n = n

    def init(self, pid, local_input):
        return tuple(0 for _ in range(8 * self.n))

    def on_round(self, state, inbox):
        return state, [], True

    def output(self, state):
        return []


def test_cc_sim_zero_round_program():
    g = gen_graph("gnp", 8, prob=0.4, seed=1)
    rep = simulate_cc_on_semimpc(OutputLocalInput(), g)
    # redistribution plus the round that rebuilds local inputs
    assert rep.native.rounds_used == 0
    assert rep.simulated.rounds_used == 2
    assert rep.bound_checks["rounds_ok"]
    assert rep.bound_checks["outputs_ok"]


def test_cc_sim_boruvka_round_count_and_outputs():
    g = gen_graph("gnp", 64, prob=0.1, seed=2)
    rep = simulate_cc_on_semimpc(cc_boruvka_connectivity(64), g, seed=5)
    assert rep.all_ok
    assert rep.simulated.rounds_used == rep.native.rounds_used + 1
    assert rep.simulated.params.p == 64
    assert rep.simulated.outputs == rep.native.outputs
    assert rep.native.outputs == [[x] for x in components_oracle(g)]


def test_cc_sim_star_redistribution_traffic():
    g = gen_graph("star", 8)
    placement = [[] for _ in range(8)]
    placement[3] = list(g.edges)
    rep = simulate_cc_on_semimpc(cc_boruvka_connectivity(8), g,
                                 initial_edges=placement)
    assert rep.all_ok
    round1 = rep.simulated.trace.rounds[0]
    # the hub's machine hears about all 7 incident edges
    assert round1.recv_words(0) == 7
    # two notifications per stored edge, minus the free one to itself
    assert round1.sent_words(3) == 2 * g.m - 1


def test_cc_sim_refuses_memory_hog():
    g = gen_graph("complete", 8)
    with pytest.raises(SimulationRefused, match="memory"):
        simulate_cc_on_semimpc(MemoryHog(8), g)


def test_cc_sim_refuses_oversized_placement():
    g = gen_graph("complete", 12)
    placement = [[] for _ in range(12)]
    placement[0] = list(g.edges)  # 66 edges = 132 words > 4 * 12
    with pytest.raises(SimulationRefused, match="starts with"):
        simulate_cc_on_semimpc(cc_boruvka_connectivity(12), g,
                               initial_edges=placement)


def test_cc_sim_random_corpus():
    for seed in range(10):
        n = 16 + 8 * (seed % 3)
        g = random_graph(n, seed)
        rep = simulate_cc_on_semimpc(cc_boruvka_connectivity(n), g, seed=seed)
        assert rep.all_ok, rep.bound_checks


# -- semi-MPC on clique ----------------------------------------------------------

class BulkShipper(NodeProgram):
    """One round: machine 0 sends n words to machine 1."""

    def __init__(self, n):
        self.n = n

    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        outbox = []
        if state == 0:
            outbox.append(Message(src=0, dst=1,
                                  payload=tuple(range(self.n))))
        return state, outbox, True

    def output(self, state):
        return []


class SilentMachine(NodeProgram):
    """Halts in its first round without any messages."""

    def init(self, pid, local_input):
        return pid

    def on_round(self, state, inbox):
        return state, [], True

    def output(self, state):
        return [state]


def _semi_params(n, p, m, **kw):
    return ModelParams.semi_mpc(n, p, ell=2 * m, **kw).with_min_delta()


def test_mpc_sim_bulk_transfer_two_routed_rounds():
    n = 8
    params = ModelParams.semi_mpc(n, 2, ell=0)
    rep = simulate_semimpc_on_cc(BulkShipper(n), [[], []], params)
    assert rep.all_ok
    # one episode of two phases, plus the trailing absorb round
    assert rep.extra["episode_rounds"] == [[1, 2]]
    assert rep.simulated.rounds_used == 3
    assert rep.simulated.rounds_used <= 4 * rep.native.rounds_used


def test_mpc_sim_message_free_program_uses_zero_rounds():
    params = ModelParams.semi_mpc(8, 4, ell=0)
    rep = simulate_semimpc_on_cc(SilentMachine(), [[]] * 4, params)
    assert rep.simulated.rounds_used == 0
    assert rep.bound_checks["outputs_ok"]
    assert rep.simulated.outputs[:4] == [[0], [1], [2], [3]]


def test_mpc_sim_forest_merge_matches_native_and_oracle():
    g = gen_graph("gnp", 32, prob=0.2, seed=1)
    p = 4
    params = _semi_params(32, p, g.m)
    inputs = distribute_edges(g, p, seed=3)
    rep = simulate_semimpc_on_cc(
        semimpc_forest_merge_connectivity(32, p), inputs, params)
    assert rep.all_ok
    assert rep.simulated.rounds_used <= (2 + 2) * rep.native.rounds_used
    assert rep.simulated.outputs[0] == components_oracle(g)
    assert rep.simulated.outputs[:p] == rep.native.outputs


def test_mpc_sim_every_pair_carries_at_most_one_word():
    g = gen_graph("gnp", 24, prob=0.25, seed=8)
    p = 3
    params = _semi_params(24, p, g.m)
    inputs = distribute_edges(g, p, seed=1)
    rep = simulate_semimpc_on_cc(
        semimpc_forest_merge_connectivity(24, p), inputs, params)
    assert rep.all_ok
    for rec in rep.simulated.trace.rounds:
        seen = set()
        for s, d, w in rec.transfers:
            assert w == 1
            assert (s, d) not in seen
            seen.add((s, d))


def test_mpc_sim_requires_semi_mpc_params():
    params = ModelParams.mpc(p=2, s=64, ell=0)
    with pytest.raises(SimulationRefused):
        simulate_semimpc_on_cc(SilentMachine(), [[], []], params)


def test_mpc_sim_random_corpus():
    for seed in range(8):
        n = 16 + 8 * (seed % 2)
        g = random_connected_graph(n, seed % 5, seed)
        p = 2 + seed % 4
        params = _semi_params(n, p, g.m)
        inputs = distribute_edges(g, p, seed=seed)
        rep = simulate_semimpc_on_cc(
            semimpc_forest_merge_connectivity(n, p), inputs, params)
        assert rep.all_ok, rep.bound_checks
        assert rep.simulated.outputs[0] == components_oracle(g)


# -- CONGEST on semi-MPC ---------------------------------------------------------

class TwoRoundGossip(NodeProgram):
    """Exchange ids with neighbors for a fixed number of rounds; output the
    sorted set of ids heard.  Low round count, so machines host many nodes."""

    def __init__(self, rounds=2):
        self.rounds = rounds

    def init(self, pid, local_input):
        nbrs = tuple(sorted(u if u != pid else v for u, v in local_input))
        return (pid, 1, nbrs, ())

    def on_round(self, state, inbox):
        pid, r, nbrs, seen = state
        seen = tuple(sorted(set(seen) | {m.payload[0] for m in inbox}))
        outbox = []
        if r <= self.rounds:
            outbox = [Message(src=pid, dst=u, payload=(pid,)) for u in nbrs]
        return (pid, r + 1, nbrs, seen), outbox, r > self.rounds

    def output(self, state):
        return list(state[3])


class CongestHog(NodeProgram):
    """Memory far beyond anything it receives; must be refused."""

    def __init__(self, n):
        self.n = n

    def init(self, pid, local_input):
        return tuple(0 for _ in range(16 * self.n))

    def on_round(self, state, inbox):
        return state, [], True

    def output(self, state):
        return []


def test_congest_sim_flood_path16():
    g = gen_graph("path", 16)
    rep = simulate_congest_on_semimpc(congest_flood_components(16), g)
    assert rep.all_ok
    t = rep.native.rounds_used
    assert rep.simulated.rounds_used <= t + 3
    assert rep.measured_constants["machines"] <= 16
    assert rep.bound_checks["outputs_ok"]


def test_congest_sim_flood_cycle32_traffic():
    g = gen_graph("cycle", 32)
    rep = simulate_congest_on_semimpc(congest_flood_components(32), g)
    assert rep.all_ok
    # every machine stays within the budget the engine enforces
    assert rep.measured_constants["max_traffic_words"] <= 4 * 32


def test_congest_sim_edgeless_degenerate():
    g = Graph(n=5, edges=())
    rep = simulate_congest_on_semimpc(congest_flood_components(5), g)
    assert rep.all_ok
    assert rep.measured_constants["machines"] == 1
    assert rep.simulated.rounds_used <= rep.native.rounds_used + 3
    assert not rep.extra["high_degree_flag"]


def test_congest_sim_gossip_packs_vertices_per_machine():
    g = gen_graph("gnp", 24, prob=0.12, seed=9)
    rep = simulate_congest_on_semimpc(TwoRoundGossip(), g)
    assert rep.all_ok
    assert rep.measured_constants["machines"] < 24


def test_congest_sim_high_degree_flag_exact():
    # star: hub degree n-1 > n / T
    g = gen_graph("star", 12)
    rep = simulate_congest_on_semimpc(congest_flood_components(12), g)
    assert rep.extra["high_degree_flag"] == (11 * rep.native.rounds_used > 12)
    assert rep.extra["high_degree_flag"]

    # gossip with tiny T on a bounded-degree graph: no flag
    g = gen_graph("cycle", 24)
    rep = simulate_congest_on_semimpc(TwoRoundGossip(), g)
    assert not rep.extra["high_degree_flag"]  # 2 * 3 <= 24


def test_congest_sim_refuses_memory_hog():
    g = gen_graph("path", 8)
    with pytest.raises(SimulationRefused, match="memory"):
        simulate_congest_on_semimpc(CongestHog(8), g)


def test_congest_sim_refuses_small_round_budget():
    g = gen_graph("path", 8)
    with pytest.raises(SimulationRefused, match="budget"):
        simulate_congest_on_semimpc(congest_flood_components(8), g,
                                    round_budget=2)


def test_congest_sim_outputs_identical_per_node():
    for seed in range(6):
        n = 20 + 4 * (seed % 3)
        g = random_connected_graph(n, n // 5, seed)
        rep = simulate_congest_on_semimpc(TwoRoundGossip(), g)
        assert rep.all_ok, rep.bound_checks
        native = run_congest(TwoRoundGossip(), g)
        assert rep.native.outputs == native.outputs


def test_congest_sim_assignment_in_report():
    g = gen_graph("path", 16)
    rep = simulate_congest_on_semimpc(congest_flood_components(16), g)
    machine_of = rep.extra["assignment"]
    assert len(machine_of) == 16
    assert max(machine_of) < rep.measured_constants["machines"]
