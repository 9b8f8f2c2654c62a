import itertools
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from choreo.choreo_enums import ProtocolName
from choreo.denote import (
    Config,
    DistRecord,
    add_any,
    canonical_multiset,
    count_occurrences,
    denote_closed,
    netwk,
    netwk_multisets,
    output_set_to_json,
    perm,
    trunc,
)
from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.hll import close_program
from choreo.protocols import LEADER, REPLICA, build_instance
from choreo.values import BOOL_T, BOT, TOP, OptionType, boolean, none, pair, some

L, R = LEADER, REPLICA


# =============================================================================
# SimpleVote
# =============================================================================

def test_simple_vote_output_set(simple_vote_instance):
    outputs = denote_closed(simple_vote_instance.config, simple_vote_instance.closed())
    assert outputs == {DistRecord.of({L: [some(TOP)]}), DistRecord.of({L: [none(BOOL_T)]})}


def test_simple_vote_network_lists(simple_vote_instance):
    lists = netwk(simple_vote_instance.config, R, (TOP, TOP, BOT), BOOL_T)
    # 3 good votes plus one Byzantine vote, at least 3 delivered, any order
    expected = set()
    for byz in (BOT, TOP):
        pool = (TOP, TOP, BOT, byz)
        for k in (3, 4):
            expected |= set(itertools.permutations(pool, k))
    assert lists == expected
    assert {canonical_multiset(l) for l in lists} == {
        canonical_multiset(m) for m in
        [(TOP, TOP, TOP), (TOP, TOP, BOT), (TOP, BOT, BOT), (TOP, TOP, TOP, BOT), (TOP, TOP, BOT, BOT)]
    }
    assert len(lists) == 17


def test_output_set_json_is_canonical(simple_vote_instance):
    outputs = denote_closed(simple_vote_instance.config, simple_vote_instance.closed())
    assert output_set_to_json(outputs) == [
        {"L": [{"t": "opt", "v": None}]},
        {"L": [{"t": "opt", "v": {"t": "bool", "v": True}}]},
    ]


# =============================================================================
# Network relation
# =============================================================================

def test_add_any_appends_every_choice():
    assert add_any((TOP,), 2, BOOL_T) == {(TOP, a, b) for a in (BOT, TOP) for b in (BOT, TOP)}
    assert add_any((TOP,), 0, BOOL_T) == {(TOP,)}


def test_perm_and_trunc():
    assert perm((TOP, BOT)) == {(TOP, BOT), (BOT, TOP)}
    assert trunc((TOP, BOT, TOP), 2) == {(TOP, BOT), (TOP, BOT, TOP)}


def test_trunc_cannot_wait_for_more_than_exists():
    with pytest.raises(ConfigurationException):
        trunc((TOP,), 2)


def test_netwk_rejects_wrong_number_of_good_messages():
    cfg = Config.build(R=(4, 1, 1))
    with pytest.raises(ConfigurationException):
        netwk(cfg, R, (TOP, TOP), BOOL_T)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 3),
    st.integers(0, 1),
    st.integers(0, 1),
    st.data(),
)
def test_multiset_path_matches_full_enumeration(g, b, extra_f, data):
    n, f = g + b, b + extra_f
    if f > n:
        return
    cfg = Config.build(R=(n, f, b))
    msgs = tuple(data.draw(st.lists(st.sampled_from([BOT, TOP]), min_size=g, max_size=g)))
    full = netwk(cfg, R, msgs, BOOL_T)
    assert netwk_multisets(cfg, R, msgs, BOOL_T) == {canonical_multiset(l) for l in full}


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.data())
def test_netwk_contains_messages_extended_by_any_byzantine_values(n, data):
    f = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(0, f))
    cfg = Config.build(R=(n, f, b))
    msgs = tuple(data.draw(st.lists(st.sampled_from([BOT, TOP]), min_size=n - b, max_size=n - b)))
    lists = netwk(cfg, R, msgs, BOOL_T)
    for extra in itertools.product((BOT, TOP), repeat=b):
        assert msgs + extra in lists


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.data())
def test_netwk_grows_with_byzantine_count(n, data):
    f = data.draw(st.integers(1, n - 1))
    b = data.draw(st.integers(0, f - 1))
    msgs = tuple(data.draw(st.lists(st.sampled_from([BOT, TOP]), min_size=n - b, max_size=n - b)))
    # The last good sender turns Byzantine; it can still send what it sent before
    fewer = netwk(Config.build(R=(n, f, b)), R, msgs, BOOL_T)
    more = netwk(Config.build(R=(n, f, b + 1)), R, msgs[:-1], BOOL_T)
    assert fewer <= more


def test_count_occurrences():
    assert count_occurrences(TOP, (TOP, BOT, TOP)) == 2
    assert count_occurrences(BOT, ()) == 0


def test_byzantine_count_above_fault_bound_is_rejected():
    with pytest.raises(ConfigurationException):
        Config.build(R=(4, 1, 2))


def test_vector_literal_length_must_match_good_nodes():
    inst = build_instance(ProtocolName.SIMPLE_VOTE)
    bad = close_program(inst.program, {"p": {L: (TOP,)}, "x": {R: (TOP, TOP)}}, inst.input_types)
    with pytest.raises(ConfigurationException):
        denote_closed(inst.config, bad)


# =============================================================================
# Independent oracle
# =============================================================================

def _oracle_bosco(xs, n, f, b):
    """Per-receiver outcomes computed without the enumerator, then crossed."""
    outcomes = set()
    for byz in itertools.product((BOT, TOP), repeat=b):
        pool = tuple(xs) + byz
        for k in range(n - f, len(pool) + 1):
            for chosen in itertools.permutations(pool, k):
                counts = Counter(chosen)
                tops, bots = counts[TOP], counts[BOT]
                newv, cnt = (True, tops) if tops >= bots else (False, bots)
                dec = some(boolean(newv)) if 2 * cnt > n + 3 * f else none(BOOL_T)
                outcomes.add(pair(dec, boolean(newv)))
    return {DistRecord.of({R: combo}) for combo in itertools.product(sorted(outcomes, key=repr), repeat=len(xs))}


@pytest.mark.parametrize("xs", list(itertools.product((BOT, TOP), repeat=3)))
def test_bosco_denotation_matches_oracle(xs):
    inst = build_instance(ProtocolName.BOSCO, n=4, f=1, b=1, inputs={"R": [x.payload for x in xs]})
    assert denote_closed(inst.config, inst.closed()) == _oracle_bosco(xs, 4, 1, 1)


def test_materialized_lists_give_same_outputs(bosco_instance):
    cfg, p = bosco_instance.config, bosco_instance.closed()
    assert denote_closed(cfg, p, materialize_lists=True) == denote_closed(cfg, p)


def test_outputs_are_records_over_result_roles(seqpaxos_instance):
    outputs = denote_closed(seqpaxos_instance.config, seqpaxos_instance.closed())
    assert outputs
    for record in outputs:
        assert record.roles == [L, R]
        leader_out = record[L][0]
        assert leader_out.type.left == OptionType(seqpaxos_instance.value_type)
