import pytest
from hypothesis import given, settings, strategies as st

from choreo.channel import (
    ChannelSpec,
    ChannelState,
    ChanByzSend,
    ChanReceive,
    ChanSend,
    byz_labels,
    channel_step,
    extract_bigstep,
    is_finished,
    mailbox_within_bound,
    netwk_lll,
    receive_options,
)
from choreo.denote import NodeId
from choreo.exceptions.semantics_exception import ChannelNotFinishedException, NotEnabledException
from choreo.hll import Role
from choreo.values import BOT, TOP

L, R = Role("L"), Role("R")
R0, R1, R2 = NodeId(R, 0), NodeId(R, 1), NodeId(R, 2)
RB = NodeId(R, 0, byzantine=True)
L0 = NodeId(L, 0)
VOTES = ((R0, TOP), (R1, TOP), (R2, BOT))


@pytest.fixture(scope="module")
def vote_spec(simple_vote_system, simple_vote_instance):
    return ChannelSpec.from_entry(simple_vote_system.delta[0], simple_vote_instance.config)


@pytest.fixture(scope="module")
def echo_spec(bosco_system, bosco_instance):
    return ChannelSpec.from_entry(bosco_system.delta[0], bosco_instance.config)


def _after_votes(spec):
    state = ChannelState.initial(spec)
    for sender, v in VOTES:
        state = channel_step(spec, state, ChanSend(sender, v))
    return state


def test_spec_from_context_entry(vote_spec):
    assert vote_spec.senders == (R0, R1, R2)
    assert vote_spec.byz_senders == (RB,)
    assert vote_spec.receivers == (L0,)
    assert vote_spec.lo == 3
    assert not vote_spec.self_role


# =============================================================================
# Transitions
# =============================================================================

def test_send_broadcasts_to_every_mailbox(vote_spec):
    state = _after_votes(vote_spec)
    assert state.mailbox == ((TOP, TOP, BOT),)
    assert state.sent_msgs == (TOP, TOP, BOT)
    assert state.sent == {R0, R1, R2}


def test_sender_cannot_send_twice(vote_spec):
    state = channel_step(vote_spec, ChannelState.initial(vote_spec), ChanSend(R0, TOP))
    with pytest.raises(NotEnabledException):
        channel_step(vote_spec, state, ChanSend(R0, BOT))


def test_receive_needs_enough_delivered_messages(vote_spec):
    state = ChannelState.initial(vote_spec)
    state = channel_step(vote_spec, state, ChanSend(R0, TOP))
    state = channel_step(vote_spec, state, ChanSend(R1, TOP))
    with pytest.raises(NotEnabledException):
        channel_step(vote_spec, state, ChanReceive(L0, (TOP, TOP)))
    assert receive_options(vote_spec, state, L0) == []


def test_receive_must_come_from_the_mailbox(vote_spec):
    state = _after_votes(vote_spec)
    with pytest.raises(NotEnabledException):
        channel_step(vote_spec, state, ChanReceive(L0, (TOP, TOP, TOP)))


def test_byzantine_sender_sends_once_per_receiver(vote_spec):
    state = channel_step(vote_spec, ChannelState.initial(vote_spec), ChanByzSend(RB, L0, TOP))
    assert state.mailbox == ((TOP,),)
    with pytest.raises(NotEnabledException):
        channel_step(vote_spec, state, ChanByzSend(RB, L0, BOT))
    with pytest.raises(NotEnabledException):
        channel_step(vote_spec, state, ChanByzSend(R0, L0, BOT))


def test_self_role_receiver_waits_for_its_own_send(echo_spec):
    assert echo_spec.self_role
    state = ChannelState.initial(echo_spec)
    state = channel_step(echo_spec, state, ChanSend(R1, BOT))
    state = channel_step(echo_spec, state, ChanByzSend(RB, R0, TOP))
    assert receive_options(echo_spec, state, R0) == []
    with pytest.raises(NotEnabledException):
        channel_step(echo_spec, state, ChanReceive(R0, (BOT, TOP)))

    state = channel_step(echo_spec, state, ChanSend(R0, TOP))
    assert receive_options(echo_spec, state, R0, commutative=True) == [(BOT, TOP), (TOP, TOP), (BOT, TOP, TOP)]


# =============================================================================
# Receive options and Byzantine labels
# =============================================================================

def test_commutative_receive_options_collapse_orderings(vote_spec):
    state = _after_votes(vote_spec)
    assert receive_options(vote_spec, state, L0, commutative=True) == [(BOT, TOP, TOP)]
    assert set(receive_options(vote_spec, state, L0)) == {(TOP, TOP, BOT), (TOP, BOT, TOP), (BOT, TOP, TOP)}


def test_netwk_lll_truncates_at_lower_bound():
    assert netwk_lll((TOP, BOT), 1) == {(TOP,), (BOT,), (TOP, BOT), (BOT, TOP)}


def test_byz_labels_skip_receivers_that_already_received(vote_spec):
    state = _after_votes(vote_spec)
    assert byz_labels(vote_spec, state) == [ChanByzSend(RB, L0, BOT), ChanByzSend(RB, L0, TOP)]

    state = channel_step(vote_spec, state, ChanReceive(L0, (TOP, TOP, BOT)))
    assert byz_labels(vote_spec, state) == []
    assert len(byz_labels(vote_spec, state, after_receive=True)) == 2


# =============================================================================
# Finished channels
# =============================================================================

def test_extract_bigstep_only_once_finished(vote_spec):
    state = _after_votes(vote_spec)
    assert not is_finished(vote_spec, state)
    with pytest.raises(ChannelNotFinishedException):
        extract_bigstep(vote_spec, state)

    state = channel_step(vote_spec, state, ChanReceive(L0, (BOT, TOP, TOP)))
    assert is_finished(vote_spec, state)
    assert extract_bigstep(vote_spec, state) == {L0: (BOT, TOP, TOP)}


def _enabled(spec, state):
    labels = [ChanSend(s, v) for s in spec.senders if s not in state.sent for v in (BOT, TOP)]
    labels += byz_labels(spec, state, after_receive=True)
    labels += [ChanReceive(r, msgs) for r in spec.receivers for msgs in receive_options(spec, state, r)]
    return labels


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_random_walks_keep_mailboxes_bounded(echo_spec, data):
    state = ChannelState.initial(echo_spec)
    while True:
        labels = _enabled(echo_spec, state)
        if not labels:
            break
        state = channel_step(echo_spec, state, data.draw(st.sampled_from(labels)))
        assert mailbox_within_bound(echo_spec, state)
    assert is_finished(echo_spec, state)
