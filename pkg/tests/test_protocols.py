import logging

import pytest

from choreo.choreo_enums import ProtocolName
from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.global_lts import global_compile
from choreo.protocols import (
    LEADER,
    REPLICA,
    build_instance,
    instance_from_json,
    resilience_met,
    seqpaxos_round_type,
    uc_bosco,
    uc_prime_bosco,
    uc_prime_bosco_closed,
    uc_seqpaxos,
)
from choreo.traces import program_sha256
from choreo.values import BOT, TOP, NatType, OptionType, PairType, nat, none, pair, some


# =============================================================================
# Instances
# =============================================================================

def test_simple_vote_defaults(simple_vote_instance):
    inst = simple_vote_instance
    assert (inst.n, inst.f, inst.b) == (4, 1, 1)
    assert inst.inputs == {"p": {LEADER: (TOP,)}, "x": {REPLICA: (TOP, TOP, BOT)}}
    assert inst.plain_inputs() == {"L": [True], "R": [True, True, False]}
    assert inst.precondition_met


def test_unmet_precondition_is_logged(caplog):
    with caplog.at_level(logging.WARNING, logger="choreo.protocols"):
        inst = build_instance(ProtocolName.BOSCO, n=3, f=1, b=0)
    assert not inst.precondition_met
    assert "n > 3f" in caplog.text


@pytest.mark.parametrize("name", [ProtocolName.SIMPLE_VOTE, ProtocolName.BOSCO])
def test_byzantine_default_never_exceeds_fault_bound(name):
    assert build_instance(name, n=3, f=0).b == 0
    assert build_instance(name, n=4, f=2).b == 1


def test_unknown_parameter_is_rejected():
    with pytest.raises(ConfigurationException, match="iteratons"):
        build_instance(ProtocolName.BOSCO, iteratons=2)


def test_parameter_a_protocol_does_not_use_is_logged(caplog):
    with caplog.at_level(logging.DEBUG, logger="choreo.protocols"):
        inst = build_instance(ProtocolName.SIMPLE_VOTE, iterations=2, asymmetric=True)
    assert inst.iterations == 0
    assert "does not use asymmetric, iterations" in caplog.text


def test_with_inputs_replaces_one_role(simple_vote_instance):
    inst = simple_vote_instance.with_inputs({REPLICA: (BOT, BOT, BOT)})
    assert inst.inputs["x"][REPLICA] == (BOT, BOT, BOT)
    assert inst.inputs["p"][LEADER] == (TOP,)
    assert simple_vote_instance.inputs["x"][REPLICA] == (TOP, TOP, BOT)


def test_with_inputs_rejects_bad_vectors(simple_vote_instance, bosco_instance):
    with pytest.raises(ConfigurationException):
        simple_vote_instance.with_inputs({REPLICA: (TOP,)})
    with pytest.raises(ConfigurationException):
        bosco_instance.with_inputs({LEADER: (TOP,)})


@pytest.mark.parametrize("name, params", [
    (ProtocolName.SIMPLE_VOTE, {}),
    (ProtocolName.BOSCO, {"n": 4, "iterations": 1, "asymmetric": True, "inputs": {"R": [False, True, True]}}),
    (ProtocolName.SEQPAXOS, {"n": 3, "iterations": 1, "value_size": 3}),
])
def test_instance_json_rebuilds_the_same_program(name, params):
    inst = build_instance(name, **params)
    again = instance_from_json(inst.to_json())
    assert again.to_json() == inst.to_json()
    assert program_sha256(again.closed()) == program_sha256(inst.closed())


def test_unknown_protocol_in_json_is_rejected():
    with pytest.raises(ConfigurationException):
        instance_from_json({"protocol": "raft"})


def test_plain_inputs_are_decoded_and_checked():
    inst = build_instance(ProtocolName.SEQPAXOS, n=2, f=1, value_size=2, inputs={"R": [[1, 1], [None, 0]]})
    rt = seqpaxos_round_type(2, 0)
    assert inst.inputs["x"][REPLICA] == (pair(some(nat(1, NatType(1))), nat(1, rt)), pair(none(NatType(1)), nat(0, rt)))
    with pytest.raises(ConfigurationException):
        build_instance(ProtocolName.BOSCO, inputs={"R": [True]})
    with pytest.raises(ConfigurationException):
        build_instance(ProtocolName.BOSCO, inputs={"L": [True]})
    with pytest.raises(ConfigurationException):
        build_instance(ProtocolName.BOSCO, inputs={"R": "true"})


def test_seqpaxos_needs_a_nonempty_value_domain():
    with pytest.raises(ConfigurationException):
        build_instance(ProtocolName.SEQPAXOS, value_size=0)


def test_seqpaxos_round_type_covers_counts_and_rounds():
    assert seqpaxos_round_type(3, 2) == NatType(4)
    assert seqpaxos_round_type(5, 0) == NatType(5)


def test_seqpaxos_with_byzantine_replica_compiles():
    inst = build_instance(ProtocolName.SEQPAXOS, n=4, f=1, b=1)
    assert len(inst.inputs["x"][REPLICA]) == 3
    system = global_compile(inst.closed(), inst.config)
    assert len(system.specs) == 3
    rt = seqpaxos_round_type(4, 0)
    assert system.delta[0].msg_type == PairType(OptionType(inst.value_type), rt)


def test_resilience_thresholds():
    assert resilience_met(ProtocolName.BOSCO, 4, 1)
    assert not resilience_met(ProtocolName.BOSCO, 3, 1)
    assert resilience_met(ProtocolName.SEQPAXOS, 3, 1)
    assert not resilience_met(ProtocolName.BOSCO, 7, 1, factor=7)


# =============================================================================
# Univalence predicates
# =============================================================================

def test_uc_bosco_counts_a_strict_majority_over_n_plus_f():
    uc = uc_bosco(4, 1)
    assert uc((TOP, TOP, TOP), TOP)
    assert not uc((TOP, TOP, BOT), TOP)
    assert not uc((TOP, TOP, TOP), BOT)


def test_uc_prime_definition_and_closed_form_agree():
    config = build_instance(ProtocolName.BOSCO, n=4, f=1, b=1).config
    definitional = uc_prime_bosco(config, 4, 1)
    closed = uc_prime_bosco_closed(4, 1)
    for xs in [(TOP, TOP, TOP), (TOP, TOP, BOT), (BOT, BOT, BOT), (BOT, BOT, TOP)]:
        for B in (TOP, BOT):
            assert definitional(xs, B) == closed(xs, B)


def test_uc_seqpaxos_requires_every_fold_to_hold_the_value():
    inst = build_instance(ProtocolName.SEQPAXOS, n=3, f=1, value_size=2)
    rt = seqpaxos_round_type(3, 0)
    V = inst.value_type
    uc = uc_seqpaxos(inst.config, V, rt)
    one = nat(1, V)
    accepted = pair(some(one), nat(1, rt))
    empty = pair(none(V), nat(0, rt))
    assert uc((accepted, accepted, accepted), one)
    assert uc((accepted, accepted, empty), one)
    assert not uc((accepted, empty, empty), one)
    assert not uc((accepted, accepted, accepted), nat(0, V))
