import itertools
from types import SimpleNamespace

import pytest

from choreo import denote, global_lts
from choreo.denote import NodeId, denote_closed
from choreo.exceptions.budget_exceeded_exception import BudgetExceededException
from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.exceptions.semantics_exception import NotCompletedException, NotEnabledException
from choreo.exceptions.trace_format_exception import TraceFormatException
from choreo.global_lts import (
    Budget,
    ByzL,
    ReceiveL,
    SendL,
    align,
    bigstep_run,
    check_adequacy,
    check_composition,
    check_decomposition,
    enabled,
    explore,
    extract,
    is_completed,
    is_permissible,
    label_from_json,
    label_to_json,
    project_labels,
    sample_traces,
    simulate,
    stitch,
)
from choreo.hll import ChannelId, is_normal, normalize
from choreo.lll import NodeSend
from choreo.protocols import LEADER, REPLICA
from choreo.values import TOP

C = ChannelId("c")


# =============================================================================
# Compilation and enabled labels
# =============================================================================

def test_compiled_simple_vote_system(simple_vote_system):
    assert [str(n) for n in simple_vote_system.node_ids] == ["L/0", "R/0", "R/1", "R/2"]
    assert [spec.channel for spec in simple_vote_system.specs] == [C]
    assert simple_vote_system.commutative == (True,)
    assert simple_vote_system.result_roles == (LEADER,)


def test_initially_only_sends_and_byzantine_sends_are_enabled(simple_vote_system):
    labels = enabled(simple_vote_system, simple_vote_system.initial)
    assert len(labels) == 5
    assert sum(isinstance(l, SendL) for l in labels) == 3
    assert sum(isinstance(l, ByzL) for l in labels) == 2
    assert not any(isinstance(l, ReceiveL) for l in labels)


def test_initial_state_is_not_completed(simple_vote_system):
    assert not is_completed(simple_vote_system.initial)
    with pytest.raises(NotCompletedException):
        extract(simple_vote_system, simple_vote_system.initial)


# =============================================================================
# Exploration
# =============================================================================

def test_exploration_outputs_match_denotation(simple_vote_instance, simple_vote_system):
    exploration = explore(simple_vote_system)
    assert exploration.exhaustive
    assert not exploration.stuck
    den = denote_closed(simple_vote_instance.config, simple_vote_instance.closed())
    assert exploration.outputs_for(simple_vote_system.result_roles) == den


def test_exploration_does_not_depend_on_jobs(bosco_system):
    serial = explore(bosco_system, jobs=1)
    threaded = explore(bosco_system, jobs=2)
    assert serial.outputs == threaded.outputs
    assert serial.num_states == threaded.num_states


def test_receive_dedup_keeps_outputs(bosco_system):
    deduped = explore(bosco_system)
    full = explore(bosco_system, dedup_receives=False)
    assert full.outputs == deduped.outputs
    assert full.num_states >= deduped.num_states


@pytest.mark.parametrize("fixture", ["simple_vote_system", "bosco_system"])
def test_byzantine_sends_after_receive_do_not_change_outputs(request, fixture):
    system = request.getfixturevalue(fixture)
    usual = explore(system)
    late = explore(system, after_receive=True)
    assert late.outputs == usual.outputs
    assert late.num_states >= usual.num_states


def test_state_dedup_keeps_outputs(simple_vote_system):
    deduped = explore(simple_vote_system)
    full = explore(simple_vote_system, dedup_states=False)
    assert full.outputs == deduped.outputs
    assert full.num_states > deduped.num_states


def test_budget_overrun_carries_partial_result(simple_vote_system):
    with pytest.raises(BudgetExceededException) as info:
        explore(simple_vote_system, Budget(max_states=3))
    partial = info.value.partial
    assert not partial.exhaustive
    assert partial.num_states > 3


def test_budgets_must_be_positive():
    with pytest.raises(ConfigurationException):
        Budget(max_states=0)


def test_wall_clock_budget_stops_inside_a_level(simple_vote_system, monkeypatch):
    ticks = itertools.count()
    monkeypatch.setattr(global_lts, "time", SimpleNamespace(monotonic=lambda: next(ticks)))
    with pytest.raises(BudgetExceededException) as info:
        explore(simple_vote_system, Budget(seconds=1.5))
    partial = info.value.partial
    level_one = list(partial.graph.successors(partial.root))
    assert len(level_one) == 5
    # Only the first state of the second level was expanded
    assert [partial.graph.out_degree(nid) > 0 for nid in level_one].count(True) == 1


def test_recorded_traces_replay_to_completed_states(bosco_system):
    exploration = explore(bosco_system)
    for nid, record in exploration.completed.items():
        replay = is_permissible(bosco_system, exploration.trace_to(nid))
        assert replay.ok
        assert replay.state == exploration.state(nid)
        assert extract(bosco_system, replay.state) == record


# =============================================================================
# Random walks and replay
# =============================================================================

def test_simulation_is_deterministic_per_seed(seqpaxos_system):
    first = simulate(seqpaxos_system, 11)
    assert simulate(seqpaxos_system, 11) == first
    labels, state = first
    assert is_completed(state)
    assert is_permissible(seqpaxos_system, labels).state == state


def test_simulated_outputs_are_in_denotation(bosco_instance, bosco_system):
    den = denote_closed(bosco_instance.config, bosco_instance.closed())
    for labels in sample_traces(bosco_system, 20, seed=3):
        state = is_permissible(bosco_system, labels).state
        assert extract(bosco_system, state).restrict(bosco_system.result_roles) in den


def test_duplicated_send_is_rejected_on_replay(simple_vote_system):
    labels, _ = simulate(simple_vote_system, 5)
    first_send = next(l for l in labels if isinstance(l, SendL))
    replay = is_permissible(simple_vote_system, labels + [first_send])
    assert not replay.ok
    assert replay.failed_at == len(labels)
    assert replay.reason


@pytest.mark.parametrize("seed", range(5))
def test_aligned_trace_reaches_the_same_state(seqpaxos_system, seed):
    labels, state = simulate(seqpaxos_system, seed)
    aligned = align(seqpaxos_system.delta, labels)
    assert sorted(map(str, aligned)) == sorted(map(str, labels))
    assert align(seqpaxos_system.delta, aligned) == aligned
    replay = is_permissible(seqpaxos_system, aligned)
    assert replay.ok
    assert replay.state == state


# =============================================================================
# Decomposition and composition
# =============================================================================

@pytest.mark.parametrize("seed", range(5))
def test_traces_decompose_and_recompose(bosco_system, seqpaxos_system, seed):
    for sys in (bosco_system, seqpaxos_system):
        labels, _ = simulate(sys, seed)
        assert check_decomposition(sys, labels)
        assert check_composition(sys, labels)


def test_projection_onto_a_node(simple_vote_system):
    labels, _ = simulate(simple_vote_system, 2)
    r0 = NodeId(REPLICA, 0)
    local = project_labels(labels, r0)
    assert len(local) == 1
    assert isinstance(local[0], NodeSend)


def test_stitch_rejects_leftover_labels(simple_vote_system):
    with pytest.raises(NotEnabledException):
        stitch(simple_vote_system, [], {NodeId(REPLICA, 0): [NodeSend(C, TOP)]})


def test_stitch_rejects_missing_channel_label(simple_vote_system):
    with pytest.raises(NotEnabledException):
        stitch(simple_vote_system, [C], {})


# =============================================================================
# Label codec
# =============================================================================

def test_label_codec(bosco_system):
    labels, _ = simulate(bosco_system, 9)
    assert [label_from_json(label_to_json(l), bosco_system) for l in labels] == labels


def test_label_on_unknown_channel_is_rejected(simple_vote_system):
    bad = {"kind": "send", "node": "R/0", "chan": "zz.0", "v": {"t": "bool", "v": True}}
    with pytest.raises(TraceFormatException):
        label_from_json(bad, simple_vote_system)


# =============================================================================
# Big-step and adequacy
# =============================================================================

def test_bigstep_needs_normal_form(simple_vote_instance):
    closed = simple_vote_instance.closed()
    normal = normalize(closed)
    assert is_normal(normal)
    assert bigstep_run(normal, simple_vote_instance.config) == denote_closed(simple_vote_instance.config, closed)
    assert not is_normal(closed)
    with pytest.raises(ConfigurationException):
        bigstep_run(closed, simple_vote_instance.config)


@pytest.mark.parametrize("fixture", ["simple_vote_instance", "bosco_instance", "seqpaxos_instance"])
def test_bigstep_runs_on_channel_rules(request, monkeypatch, fixture):
    inst = request.getfixturevalue(fixture)
    den = denote_closed(inst.config, inst.closed())
    normal = normalize(inst.closed())

    def comm_denotation_used(*args, **kwargs):
        raise AssertionError("big-step evaluated a comm through the denotation")
    monkeypatch.setattr(denote, "comm_outcomes", comm_denotation_used)
    assert bigstep_run(normal, inst.config) == den


def test_adequacy_report_for_simple_vote(simple_vote_instance):
    report = check_adequacy(simple_vote_instance.closed(), simple_vote_instance.config)
    assert report.holds
    details = report.details
    assert details["subset"] and details["equal"]
    assert details["operational_in_bigstep"] and details["bigstep_in_denotation"]
    assert details["stuck_states"] == 0
    assert details["operational"] == details["denotational"]
    assert report.counterexample is None


def test_adequacy_is_inconclusive_under_tiny_budget(simple_vote_instance):
    report = check_adequacy(simple_vote_instance.closed(), simple_vote_instance.config, Budget(max_states=3))
    assert report.verdict.value == "inconclusive"
    assert not report.exhaustive
