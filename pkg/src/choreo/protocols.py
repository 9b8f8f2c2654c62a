"""
Choreo - Built-in Protocols

SimpleVote, binary Bosco and SeqPaxos as HLL programs, plus ProtocolInstance:
a protocol fixed to one configuration, value domain, iteration count and
input.

Inputs in plain form map role names to lists (the form the CLI and trace
headers use):

    simplevote   {"L": [true], "R": [true, true, false]}
    bosco        {"R": [true, false, true]}
    seqpaxos     {"L": [1], "R": [[null, 0], [null, 0]]}
"""

import inspect
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple

from choreo import functions as fns
from choreo.choreo_enums import ProtocolName
from choreo.denote import Config, netwk, netwk_multisets
from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.hll import (
    Program,
    ProtocolBody,
    Role,
    TypeEnv,
    app,
    close_program,
    comm,
    iterate,
    lets,
    lift,
    ret,
    var,
)
from choreo.values import (
    BOOL_T,
    BOT,
    TOP,
    NatType,
    OptionType,
    PairType,
    Value,
    ValueType,
    apply,
    fold,
    nat,
    none,
    pair,
    some,
    value_from_plain,
    value_to_plain,
)

logger = logging.getLogger(__name__)

LEADER = Role("L")
REPLICA = Role("R")


# =============================================================================
# Programs
# =============================================================================

def simple_vote(n: int, f: int) -> Program:
    """
    let cnt := comm c x_R 0_L (fcnteq p_L) in ret {L -> calc_dec cnt_L p_L}

    Free inputs: p : {L: bool}, x : {R: bool}.
    """
    count_type = NatType(n)
    return lets(
        [("cnt", comm("c", var("x", REPLICA), lift(nat(0, count_type), LEADER),
                      app(lift(fns.fcnteq(BOOL_T, count_type), LEADER), var("p", LEADER))))],
        ret({LEADER: app(lift(fns.calc_dec(n, f, count_type), LEADER), var("cnt", LEADER), var("p", LEADER))}),
    )


def bosco(n: int, f: int, asymmetric: bool = False) -> ProtocolBody:
    """
    One Bosco iteration over v : {R: bool}:

        let cnts := comm c v_R (0, 0)_R fcntb_R in ret {R -> mkdec cnts_R}

    The next iteration's input is the second component (newv).
    """
    count_type = NatType(n)
    out_type = PairType(OptionType(BOOL_T), BOOL_T)
    program = lets(
        [("cnts", comm("c", var("v", REPLICA), lift(pair(nat(0, count_type), nat(0, count_type)), REPLICA),
                       lift(fns.fcntb(count_type), REPLICA)))],
        ret({REPLICA: app(lift(fns.bosco_mkdec(n, f, count_type, asymmetric), REPLICA), var("cnts", REPLICA))}),
    )
    return ProtocolBody("v", ((REPLICA, BOOL_T),), program, ((REPLICA, fns.snd_fn(out_type)),))


def seqpaxos_round_type(n: int, iterations: int) -> NatType:
    """Rounds reach iterations + 2; counts reach n. One bounded type serves both."""
    return NatType(max(n, iterations + 2))


def seqpaxos(n: int, f: int, value_type: ValueType, iterations: int = 0) -> ProtocolBody:
    """
    One SeqPaxos iteration over x : {L: nat, R: (option V * nat)}.

        let maxv := comm c1 x_R (None, 0)_L fmaxr_L in
        let p := ret {L -> pickp maxv_L (default x_L)} in
        let y := comm c2 (pair p_L x_L) x_R update_R in
        let cnt := comm c3 y_R 0_L (fcnteq x_L) in
        ret {L -> pair (mkdec cnt_L p_L) (add x_L 1), R -> y_R}

    The leader passes its incremented round on; replicas pass their state on
    unchanged.
    """
    rt = seqpaxos_round_type(n, iterations)
    state_type = PairType(OptionType(value_type), rt)
    out_type = PairType(OptionType(value_type), rt)
    L, R = LEADER, REPLICA
    program = lets(
        [
            ("maxv", comm("c1", var("x", R), lift(pair(none(value_type), nat(0, rt)), L),
                          lift(fns.fmaxr(value_type, rt), L))),
            ("p", ret({L: app(lift(fns.pickp(value_type, rt), L), var("maxv", L),
                              app(lift(fns.default_table(value_type, rt), L), var("x", L)))})),
            ("y", comm("c2", app(lift(fns.pair_fn(value_type, rt), L), var("p", L), var("x", L)),
                       var("x", R), lift(fns.update(value_type, rt), R))),
            ("cnt", comm("c3", var("y", R), lift(nat(0, rt), L),
                         app(lift(fns.fcnteq_round(rt, rt, value_type), L), var("x", L)))),
        ],
        ret({
            L: app(lift(fns.pair_fn(OptionType(value_type), rt), L),
                   app(lift(fns.seqpaxos_mkdec(f, rt, value_type), L), var("cnt", L), var("p", L)),
                   app(lift(fns.add(rt), L), var("x", L), lift(nat(1, rt), L))),
            R: var("y", R),
        }),
    )
    return ProtocolBody(
        "x",
        ((L, rt), (R, state_type)),
        program,
        ((L, fns.snd_fn(out_type)), (R, None)),
    )


def seqpaxos_init(n: int, value_type: ValueType, iterations: int = 0,
                  good: Optional[int] = None) -> Dict[Role, Tuple[Value, ...]]:
    """Leader starts at round 1, each of the good replicas (default n) at (None, 0)."""
    rt = seqpaxos_round_type(n, iterations)
    good = n if good is None else good
    return {LEADER: (nat(1, rt),), REPLICA: (pair(none(value_type), nat(0, rt)),) * good}


# =============================================================================
# Resilience preconditions
# =============================================================================

RESILIENCE: Dict[ProtocolName, Tuple[int, str]] = {
    ProtocolName.SIMPLE_VOTE: (3, "n > 3f"),
    ProtocolName.BOSCO: (3, "n > 3f"),
    ProtocolName.SEQPAXOS: (2, "n > 2f"),
}

ONE_STEP_FACTOR = 7


def resilience_met(name: ProtocolName, n: int, f: int, factor: Optional[int] = None) -> bool:
    factor = RESILIENCE[name][0] if factor is None else factor
    return n > factor * f


# =============================================================================
# Instances
# =============================================================================

@dataclass
class ProtocolInstance:
    """
    A protocol with everything needed to close it: configuration, value
    domain, iteration count and distributed input.

    program is open in the variables of input_types; closed() binds them.
    """
    name: ProtocolName
    n: int
    f: int
    b: int
    config: Config
    program: Program
    input_types: TypeEnv
    inputs: Dict[str, Dict[Role, Tuple[Value, ...]]]
    value_type: ValueType
    iterations: int = 0
    value_size: int = 2
    asymmetric: bool = False
    body: Optional[ProtocolBody] = None
    role_inputs: Dict[Role, str] = field(default_factory=dict)

    @property
    def precondition_met(self) -> bool:
        return resilience_met(self.name, self.n, self.f)

    def closed(self) -> Program:
        return close_program(self.program, self.inputs, self.input_types)

    def plain_inputs(self) -> Dict[str, list]:
        return {
            str(role): [value_to_plain(v) for v in self.inputs[name][role]]
            for role, name in sorted(self.role_inputs.items())
        }

    def with_inputs(self, inputs: Mapping[Role, Sequence[Value]]) -> 'ProtocolInstance':
        """Same protocol and configuration, different input vectors."""
        merged = {name: dict(record) for name, record in self.inputs.items()}
        for role, values in inputs.items():
            if role not in self.role_inputs:
                raise ConfigurationException(f"{self.name.value} takes no input at role {role}.")
            if len(values) != self.config[role].g:
                raise ConfigurationException(
                    f"Input at {role} has {len(values)} value(s) but the role has {self.config[role].g} good node(s)."
                )
            merged[self.role_inputs[role]][role] = tuple(values)
        return ProtocolInstance(**{**self.__dict__, "inputs": merged})

    def to_json(self) -> dict:
        return {
            "protocol": self.name.value,
            "n": self.n,
            "f": self.f,
            "b": self.b,
            "iterations": self.iterations,
            "value_size": self.value_size,
            "asymmetric": self.asymmetric,
            "config": self.config.to_json(),
            "inputs": self.plain_inputs(),
        }


def _decode_inputs(
    plain: Optional[Mapping[str, list]],
    types: Mapping[Role, ValueType],
    defaults: Mapping[Role, Tuple[Value, ...]],
) -> Dict[Role, Tuple[Value, ...]]:
    decoded = dict(defaults)
    for name, values in (plain or {}).items():
        role = Role(name)
        if role not in types:
            raise ConfigurationException(f"No input at role {name}; expected one of {sorted(str(r) for r in types)}.")
        if not isinstance(values, list):
            raise ConfigurationException(f"Input at role {name} must be a list.")
        if len(values) != len(defaults[role]):
            raise ConfigurationException(
                f"Input at role {name} has {len(values)} value(s), expected {len(defaults[role])}."
            )
        decoded[role] = tuple(value_from_plain(v, types[role]) for v in values)
    return decoded


def _default_byz(f: int, b: Optional[int]) -> int:
    # One Byzantine replica by default, never more than the fault bound
    return min(1, f) if b is None else b


def _desk_votes(g: int) -> Tuple[Value, ...]:
    return tuple(([TOP, TOP, BOT] * g)[:g])


def build_simple_vote(n: int = 4, f: int = 1, b: Optional[int] = None,
                      inputs: Optional[Mapping[str, list]] = None) -> ProtocolInstance:
    b = _default_byz(f, b)
    config = Config.build(L=(1, 0, 0), R=(n, f, b))
    g = config[REPLICA].g
    types = {LEADER: BOOL_T, REPLICA: BOOL_T}
    values = _decode_inputs(inputs, types, {LEADER: (TOP,), REPLICA: _desk_votes(g)})
    return ProtocolInstance(
        name=ProtocolName.SIMPLE_VOTE, n=n, f=f, b=b, config=config,
        program=simple_vote(n, f),
        input_types={"p": {LEADER: BOOL_T}, "x": {REPLICA: BOOL_T}},
        inputs={"p": {LEADER: values[LEADER]}, "x": {REPLICA: values[REPLICA]}},
        value_type=BOOL_T,
        role_inputs={LEADER: "p", REPLICA: "x"},
    )


def build_bosco(n: int = 4, f: int = 1, b: Optional[int] = None, inputs: Optional[Mapping[str, list]] = None,
                iterations: int = 0, asymmetric: bool = False) -> ProtocolInstance:
    b = _default_byz(f, b)
    config = Config.build(R=(n, f, b))
    body = iterate(bosco(n, f, asymmetric), iterations)
    values = _decode_inputs(inputs, {REPLICA: BOOL_T}, {REPLICA: (TOP,) * config[REPLICA].g})
    return ProtocolInstance(
        name=ProtocolName.BOSCO, n=n, f=f, b=b, config=config,
        program=body.program,
        input_types={body.param: body.input_record},
        inputs={body.param: values},
        value_type=BOOL_T,
        iterations=iterations,
        asymmetric=asymmetric,
        body=body,
        role_inputs={REPLICA: body.param},
    )


def build_seqpaxos(n: int = 2, f: int = 1, b: int = 0, inputs: Optional[Mapping[str, list]] = None,
                   iterations: int = 0, value_size: int = 2) -> ProtocolInstance:
    if value_size < 1:
        raise ConfigurationException(f"The value domain needs at least one value, got {value_size}.")
    value_type = NatType(value_size - 1)
    # Single leader that may crash; replicas drop up to f messages
    config = Config.build(L=(1, 1, 0), R=(n, f, b))
    body = iterate(seqpaxos(n, f, value_type, iterations), iterations)
    init = seqpaxos_init(n, value_type, iterations, good=config[REPLICA].g)
    values = _decode_inputs(inputs, body.input_record, init)
    return ProtocolInstance(
        name=ProtocolName.SEQPAXOS, n=n, f=f, b=b, config=config,
        program=body.program,
        input_types={body.param: body.input_record},
        inputs={body.param: values},
        value_type=value_type,
        iterations=iterations,
        value_size=value_size,
        body=body,
        role_inputs={LEADER: body.param, REPLICA: body.param},
    )


INSTANCE_PARAMS = ("n", "f", "b", "iterations", "value_size", "asymmetric", "inputs")

BUILDERS: Dict[ProtocolName, Callable[..., ProtocolInstance]] = {
    ProtocolName.SIMPLE_VOTE: build_simple_vote,
    ProtocolName.BOSCO: build_bosco,
    ProtocolName.SEQPAXOS: build_seqpaxos,
}


def build_instance(name: ProtocolName, **params: Any) -> ProtocolInstance:
    """
    Build a protocol instance from keyword parameters (n, f, b, iterations,
    value_size, asymmetric, inputs). Unset parameters take the protocol's
    desk defaults.

    Raises:
        ConfigurationException: a parameter name outside INSTANCE_PARAMS, or
            values the protocol rejects.
    """
    unknown = sorted(set(params) - set(INSTANCE_PARAMS))
    if unknown:
        raise ConfigurationException(f"Unknown instance parameter(s) for {name.value}: {', '.join(unknown)}.")
    builder = BUILDERS[name]
    accepted = inspect.signature(builder).parameters
    params = {k: v for k, v in params.items() if v is not None}
    unused = sorted(k for k in params if k not in accepted)
    if unused:
        logger.debug(f"{name.value} does not use {', '.join(unused)}; dropping")
    inst = builder(**{k: v for k, v in params.items() if k in accepted})
    if not inst.precondition_met:
        logger.warning(f"{name.value}: resilience precondition {RESILIENCE[name][1]} does not hold "
                       f"for n={inst.n}, f={inst.f}")
    return inst


def instance_from_json(obj: Mapping[str, Any]) -> ProtocolInstance:
    """Rebuild an instance from ProtocolInstance.to_json output."""
    try:
        name = ProtocolName(obj["protocol"])
    except (KeyError, ValueError):
        raise ConfigurationException(f"Unknown protocol in {obj!r}.") from None
    return build_instance(name, **{k: obj.get(k) for k in INSTANCE_PARAMS})


# =============================================================================
# Univalence predicates
# =============================================================================

@dataclass(frozen=True)
class UCPredicate:
    """Univalent condition: from inputs satisfying it only target can be decided."""
    name: str
    evaluator: Callable[[Sequence[Value], Value], bool] = field(compare=False, repr=False)

    def __call__(self, inputs: Sequence[Value], target: Value) -> bool:
        return self.evaluator(tuple(inputs), target)


def count_of(v: Value, vector: Sequence[Value]) -> int:
    return sum(1 for x in vector if x == v)


def uc_bosco(n: int, f: int) -> UCPredicate:
    """UC_B(x): 2 * #_B(x) > n + f."""
    return UCPredicate("UC", lambda xs, B: 2 * count_of(B, xs) > n + f)


def uc_prime_bosco_closed(n: int, f: int) -> UCPredicate:
    """UC'_true(x): 2 * #true >= n + f.  UC'_false(x): 2 * #false > n + f."""
    def evaluator(xs, B):
        doubled = 2 * count_of(B, xs)
        return doubled >= n + f if B == TOP else doubled > n + f
    return UCPredicate("UC'-closed", evaluator)


def uc_prime_bosco(config: Config, n: int, f: int, asymmetric: bool = False) -> UCPredicate:
    """
    UC'_B(x): every network list of x counts to a mkdec whose newv is B.
    Evaluated by enumeration.
    """
    count_type = NatType(n)
    counter = fns.fcntb(count_type)
    mkdec = fns.bosco_mkdec(n, f, count_type, asymmetric)
    zero = pair(nat(0, count_type), nat(0, count_type))

    def evaluator(xs, B):
        lists = netwk_multisets(config, REPLICA, xs, BOOL_T)
        return all(apply(mkdec, [fold(counter, zero, l)]).snd == B for l in lists)
    return UCPredicate("UC'", evaluator)


def uc_seqpaxos(config: Config, value_type: ValueType, round_type: NatType) -> UCPredicate:
    """
    UC_D(x): every network list of replica states folds under fmaxr from
    (None, 0) to a state holding Some D. fmaxr depends on order, so every
    list is folded.
    """
    state_type = PairType(OptionType(value_type), round_type)
    combine = fns.fmaxr(value_type, round_type)
    start = pair(none(value_type), nat(0, round_type))

    def evaluator(xs, D):
        lists = netwk(config, REPLICA, xs, state_type)
        return all(fold(combine, start, l).fst == some(D) for l in lists)
    return UCPredicate("UC_D", evaluator)
