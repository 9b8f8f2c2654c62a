import json

import pytest
from hypothesis import given, strategies as st

from choreo import functions as fns
from choreo.denote import canonical_multiset, denote_closed, netwk
from choreo.exceptions.semantics_exception import NotEnabledException
from choreo.hll import ChannelId
from choreo.lll import (
    NodeReceive,
    NodeSend,
    RcvThen,
    Return,
    SendThen,
    bind,
    node_step,
    node_trace_to_jsonl,
    node_traces,
    project,
    receive,
    respects_order,
    send,
)
from choreo.protocols import LEADER, REPLICA
from choreo.values import BOOL_T, BOT, TOP, TT, NatType, nat, none, partial, some

C = ChannelId("c")
D = ChannelId("d")
COUNT = NatType(4)


def _counter():
    return partial(fns.fcnteq(BOOL_T, COUNT), [TOP])


# =============================================================================
# Projection
# =============================================================================

def test_replica_projection_sends_its_vote(simple_vote_instance):
    node = project(simple_vote_instance.closed(), REPLICA, 2)()
    assert node == SendThen(C, BOT, Return(TT))
    assert node_step(node, NodeSend(C, BOT)) == Return(TT)


def test_leader_projection_decides_on_received_votes(simple_vote_instance):
    node = project(simple_vote_instance.closed(), LEADER, 0)()
    assert isinstance(node, RcvThen)
    assert node_step(node, NodeReceive(C, (TOP, TOP, BOT))) == Return(some(TOP))
    assert node_step(node, NodeReceive(C, (TOP, BOT, BOT))) == Return(none(BOOL_T))


def test_projected_leader_outputs_match_denotation(simple_vote_instance):
    inst = simple_vote_instance
    node = project(inst.closed(), LEADER, 0)()
    lists = netwk(inst.config, REPLICA, inst.inputs["x"][REPLICA], BOOL_T)
    outputs = {value for _, value in node_traces(node, lambda c: lists)}
    assert {record[LEADER][0] for record in denote_closed(inst.config, inst.closed())} == outputs


def test_projection_is_reproducible(bosco_instance):
    build = project(bosco_instance.closed(), REPLICA, 0)
    assert build() == build()
    assert hash(build()) == hash(build())


# =============================================================================
# Steps
# =============================================================================

def test_step_with_mismatched_label_is_not_enabled():
    node = send(C, TOP)
    with pytest.raises(NotEnabledException):
        node_step(node, NodeSend(C, BOT))
    with pytest.raises(NotEnabledException):
        node_step(node, NodeReceive(C, ()))
    with pytest.raises(NotEnabledException):
        node_step(receive(C, nat(0, COUNT), _counter()), NodeReceive(D, ()))


def test_receive_folds_the_message_list():
    node = receive(C, nat(0, COUNT), _counter())
    assert node_step(node, NodeReceive(C, (TOP, BOT, TOP))) == Return(nat(2, COUNT))


# =============================================================================
# Monad laws, compared through traces
# =============================================================================

bools = st.sampled_from([BOT, TOP])
OPTIONS = [(), (TOP,), (BOT, TOP)]


def _traces(t):
    return node_traces(t, lambda c: OPTIONS)


def _sample(v):
    return SendThen(C, v, receive(D, nat(0, COUNT), _counter()))


def _echo(v):
    return send(ChannelId("e"), TOP) if v == nat(0, COUNT) else Return(v)


@given(bools)
def test_bind_left_identity(v):
    assert bind(Return(v), _sample) == _sample(v)


@given(bools)
def test_bind_right_identity(v):
    t = _sample(v)
    assert _traces(bind(t, Return)) == _traces(t)


@given(bools)
def test_bind_associativity(v):
    t = _sample(v)
    left = bind(bind(t, _echo), lambda x: Return(x))
    right = bind(t, lambda x: bind(_echo(x), lambda y: Return(y)))
    assert _traces(left) == _traces(right)


# =============================================================================
# Channel ordering
# =============================================================================

def test_self_role_channel_sends_before_receiving(bosco_system):
    delta = bosco_system.delta
    send_label, rcv_label = NodeSend(C, TOP), NodeReceive(C, (TOP, TOP))
    assert respects_order([send_label, rcv_label], delta, REPLICA)
    assert respects_order([send_label], delta, REPLICA)
    assert not respects_order([rcv_label, send_label], delta, REPLICA)
    assert not respects_order([send_label, rcv_label, send_label], delta, REPLICA)


def test_node_traces_of_replica_follow_context(bosco_instance, bosco_system):
    node = project(bosco_instance.closed(), REPLICA, 1)()
    options = {C: [canonical_multiset(l) for l in [(TOP, BOT), (TOP, BOT, BOT)]]}
    traces = node_traces(node, lambda c: options[c])
    assert len(traces) == 2
    for labels, _ in traces:
        assert respects_order(labels, bosco_system.delta, REPLICA)


def test_node_trace_jsonl():
    text = node_trace_to_jsonl("R/0", [NodeSend(C, TOP)])
    assert json.loads(text) == {"node": "R/0", "label": {"kind": "send", "chan": "c.0", "v": {"t": "bool", "v": True}}}
