"""
Choreo - Denotational Semantics

Maps a closed program (or an open one plus an environment) to the set of
every output record it can produce under every network behavior the fault
model allows.

Network model for a sender role with n total nodes, f tolerated faults and b
actual Byzantine nodes:

    Netwk(msgs) = add_any(msgs, b) >>= perm >>= trunc(n - f)

Byzantine nodes add up to b arbitrary values of the channel's message type;
the network reorders everything and may withhold all but n - f messages.

When a receiver's combining function is declared commutative, its fold only
depends on the multiset of messages received, and enumeration works on
multiset representatives instead of every ordering.
"""

from __future__ import annotations

import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from choreo.exceptions.application_exception import ApplicationException
from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.exceptions.typing_exception import ReturnTypeException, RoleNotInRecordException, UnknownVariableException
from choreo.functions import fcnteq
from choreo.hll import App, Comm, Expr, Let, Lift, Program, Ret, Role, Var, VectorLit
from choreo.values import (
    Closure,
    NatType,
    Runtime,
    Value,
    ValueType,
    as_closure,
    enumerate_values,
    fold,
    nat,
    sort_key,
    value_from_json,
    value_to_json,
    vector_key,
)

logger = logging.getLogger(__name__)

Vector = Tuple[Value, ...]


# =============================================================================
# Configuration
# =============================================================================

@dataclass(frozen=True, order=True)
class NodeId:
    role: Role
    index: int
    byzantine: bool = False

    def __str__(self) -> str:
        return f"{self.role}/b{self.index}" if self.byzantine else f"{self.role}/{self.index}"

    @classmethod
    def parse(cls, text: str) -> 'NodeId':
        role, _, rest = text.partition("/")
        byzantine = rest.startswith("b")
        digits = rest[1:] if byzantine else rest
        if not role or not digits.isdigit():
            raise ConfigurationException(f"Cannot parse node id '{text}'.")
        return cls(Role(role), int(digits), byzantine)


@dataclass(frozen=True)
class RoleConfig:
    """n total nodes, at most f faulty, of which the b nodes in byz actually are."""
    n: int
    f: int
    good: Tuple[NodeId, ...]
    byz: Tuple[NodeId, ...]

    def __post_init__(self):
        if self.b > self.f:
            raise ConfigurationException(f"Byzantine count {self.b} exceeds the fault bound {self.f}.")
        if self.b + self.g != self.n:
            raise ConfigurationException(f"{self.g} good + {self.b} Byzantine nodes do not add up to n = {self.n}.")
        if set(self.good) & set(self.byz):
            raise ConfigurationException("Good and Byzantine node sets overlap.")
        if self.f > self.n:
            raise ConfigurationException(f"Fault bound {self.f} exceeds n = {self.n}.")

    @property
    def g(self) -> int:
        return len(self.good)

    @property
    def b(self) -> int:
        return len(self.byz)

    @property
    def lo(self) -> int:
        """Fewest messages a receiver waits for from this role."""
        return self.n - self.f


@dataclass(frozen=True)
class Config:
    roles: Tuple[Tuple[Role, RoleConfig], ...]

    def __getitem__(self, role: Role) -> RoleConfig:
        for r, rc in self.roles:
            if r == role:
                return rc
        raise ConfigurationException(f"Role {role} is not configured.")

    def __contains__(self, role: Role) -> bool:
        return any(r == role for r, _ in self.roles)

    @property
    def role_names(self) -> List[Role]:
        return [r for r, _ in self.roles]

    def good_nodes(self) -> List[NodeId]:
        return [node for _, rc in self.roles for node in rc.good]

    @classmethod
    def build(cls, **roles: Tuple[int, int, int]) -> 'Config':
        """
        Config.build(L=(1, 0, 0), R=(4, 1, 1)) configures role L with one good
        node and role R with three good nodes and one Byzantine node.
        """
        entries = []
        for name in sorted(roles):
            n, f, b = roles[name]
            role = Role(name)
            if b < 0 or b > n:
                raise ConfigurationException(f"Role {name}: Byzantine count {b} is outside 0..{n}.")
            good = tuple(NodeId(role, i) for i in range(n - b))
            byz = tuple(NodeId(role, i, byzantine=True) for i in range(b))
            rc = RoleConfig(n, f, good, byz)
            if rc.lo == 0:
                logger.warning(f"Role {name}: receivers may accept an empty message list (n - f = 0)")
            entries.append((role, rc))
        return cls(tuple(entries))

    def to_json(self) -> dict:
        return {str(role): [rc.n, rc.f, rc.b] for role, rc in self.roles}

    @classmethod
    def from_json(cls, obj: Mapping[str, Sequence[int]]) -> 'Config':
        return cls.build(**{name: tuple(v) for name, v in obj.items()})


# =============================================================================
# Records
# =============================================================================

@dataclass(frozen=True)
class DistRecord:
    """Role -> one value per good node of that role."""
    entries: Tuple[Tuple[Role, Vector], ...]

    @classmethod
    def of(cls, mapping: Mapping[Role, Sequence[Value]]) -> 'DistRecord':
        return cls(tuple(sorted((role, tuple(v)) for role, v in mapping.items())))

    def __getitem__(self, role: Role) -> Vector:
        for r, v in self.entries:
            if r == role:
                return v
        raise KeyError(role)

    def __contains__(self, role: Role) -> bool:
        return any(r == role for r, _ in self.entries)

    @property
    def roles(self) -> List[Role]:
        return [r for r, _ in self.entries]

    def as_dict(self) -> Dict[Role, Vector]:
        return dict(self.entries)

    def restrict(self, roles: Iterable[Role]) -> 'DistRecord':
        keep = set(roles)
        return DistRecord(tuple((r, v) for r, v in self.entries if r in keep))

    def sort_key(self) -> tuple:
        return tuple((r.name, vector_key(v)) for r, v in self.entries)

    def to_json(self) -> dict:
        return {str(r): [value_to_json(x) for x in v] for r, v in self.entries}

    def __str__(self) -> str:
        fields = ", ".join(f"{r}: [{', '.join(repr(x) for x in v)}]" for r, v in self.entries)
        return "{" + fields + "}"


Env = Dict[str, DistRecord]
OutputSet = FrozenSet[DistRecord]


def sorted_outputs(outputs: Iterable[DistRecord]) -> List[DistRecord]:
    return sorted(outputs, key=DistRecord.sort_key)


def output_set_to_json(outputs: Iterable[DistRecord]) -> List[dict]:
    return [record.to_json() for record in sorted_outputs(outputs)]


def record_from_json(obj: Mapping[str, list], types: Mapping[Role, ValueType]) -> DistRecord:
    return DistRecord.of({
        Role(name): [value_from_json(x, types[Role(name)]) for x in values]
        for name, values in obj.items()
    })


# =============================================================================
# Network relation
# =============================================================================

def add_any(v: Sequence[Value], b: int, t: ValueType) -> Set[Vector]:
    """v extended at the end by every choice of exactly b values of type t."""
    base = tuple(v)
    return {base + extra for extra in itertools.product(enumerate_values(t), repeat=b)}


def perm(v: Sequence[Value]) -> Set[Vector]:
    return set(itertools.permutations(v))


def trunc(v: Sequence[Value], lo: int) -> Set[Vector]:
    """
    All prefixes of v of length at least lo.

    Raises:
        ConfigurationException: lo > |v|; a receiver cannot wait for more
        messages than can exist.
    """
    if lo > len(v):
        raise ConfigurationException(f"Cannot wait for {lo} messages when only {len(v)} can arrive.")
    base = tuple(v)
    return {base[:k] for k in range(max(lo, 0), len(base) + 1)}


def _check_sender(cfg: Config, sender: Role, msgs: Sequence[Value]) -> RoleConfig:
    rc = cfg[sender]
    if len(msgs) != rc.g:
        raise ConfigurationException(
            f"Role {sender} has {rc.g} good node(s) but {len(msgs)} message(s) were supplied."
        )
    return rc


@functools.lru_cache(maxsize=4096)
def _netwk_cached(cfg: Config, sender: Role, msgs: Vector, t: ValueType) -> FrozenSet[Vector]:
    rc = _check_sender(cfg, sender, msgs)
    lists: Set[Vector] = set()
    for extended in add_any(msgs, rc.b, t):
        for permuted in perm(extended):
            lists |= trunc(permuted, rc.lo)
    logger.debug(f"Netwk from {sender}: {len(lists)} list(s) for {len(msgs)} good message(s)")
    return frozenset(lists)


def netwk(cfg: Config, sender: Role, msgs: Sequence[Value], t: ValueType) -> FrozenSet[Vector]:
    """Every message list a receiver may see when the good senders of a role sent msgs."""
    return _netwk_cached(cfg, sender, tuple(msgs), t)


def canonical_multiset(msgs: Iterable[Value]) -> Vector:
    return tuple(sorted(msgs, key=sort_key))


@functools.lru_cache(maxsize=4096)
def _netwk_multisets_cached(cfg: Config, sender: Role, msgs: Vector, t: ValueType) -> FrozenSet[Vector]:
    rc = _check_sender(cfg, sender, msgs)
    if rc.lo > rc.n:
        raise ConfigurationException(f"Cannot wait for {rc.lo} messages when only {rc.n} can arrive.")
    reps: Set[Vector] = set()
    for extended in add_any(msgs, rc.b, t):
        for k in range(max(rc.lo, 0), len(extended) + 1):
            for chosen in itertools.combinations(extended, k):
                reps.add(canonical_multiset(chosen))
    return frozenset(reps)


def netwk_multisets(cfg: Config, sender: Role, msgs: Sequence[Value], t: ValueType) -> FrozenSet[Vector]:
    """
    One sorted representative per multiset reachable through netwk.

    Equal to {canonical_multiset(l) for l in netwk(...)}: every sub-multiset
    of size >= n - f is a prefix of some permutation.
    """
    return _netwk_multisets_cached(cfg, sender, tuple(msgs), t)


def count_occurrences(v: Value, msgs: Sequence[Value]) -> int:
    """#_v(msgs) = foldl (fcnteq v) 0 msgs."""
    count_type = NatType(len(msgs))
    return fold(as_closure(fcnteq(v.type, count_type)).call(v), nat(0, count_type), msgs).payload


# =============================================================================
# Expressions and programs
# =============================================================================

def _lifted(item) -> Runtime:
    return item if isinstance(item, Value) else as_closure(item)


def denote_expr(cfg: Config, env: Env, role: Role, e: Expr) -> Tuple[Runtime, ...]:
    """
    One runtime value per good node of role.

    Raises:
        UnknownVariableException, RoleNotInRecordException,
        ConfigurationException (vector literal length), ApplicationException
    """
    g = cfg[role].g
    if isinstance(e, Var):
        if e.name not in env:
            raise UnknownVariableException(e.name)
        record = env[e.name]
        if role not in record:
            raise RoleNotInRecordException(e.name, role)
        return record[role]
    if isinstance(e, Lift):
        return (_lifted(e.item),) * g
    if isinstance(e, VectorLit):
        if len(e.items) != g:
            raise ConfigurationException(
                f"Vector literal at {role} has {len(e.items)} item(s) but the role has {g} good node(s)."
            )
        return e.items
    if isinstance(e, App):
        funs = denote_expr(cfg, env, role, e.fun)
        args = denote_expr(cfg, env, role, e.arg)
        results = []
        for fun, arg in zip(funs, args):
            if not isinstance(fun, Closure):
                raise ApplicationException(repr(fun), "not a function")
            results.append(fun.call(arg))
        return tuple(results)
    raise TypeError(f"Not an HLL expression: {e!r}")


def _values_only(role: Role, vector: Sequence[Runtime]) -> Vector:
    for item in vector:
        if not isinstance(item, Value):
            raise ReturnTypeException(f"Role {role} evaluated to a function {item!r} where a value is needed.")
    return tuple(vector)


def combine_msg_type(combine: Closure) -> ValueType:
    """Message type a combining closure folds over (its last parameter)."""
    return combine.fn.signature[-1]


def fold_outcomes(
    combine: Closure,
    default: Value,
    lists: Iterable[Sequence[Value]],
) -> List[Value]:
    """Distinct fold results over lists, in canonical order."""
    outcomes = {fold(combine, default, l) for l in lists}
    return sorted(outcomes, key=sort_key)


def comm_outcomes(
    cfg: Config,
    env: Env,
    p: Comm,
    materialize_lists: bool = False,
) -> List[List[Value]]:
    """
    Per good receiver, the canonically ordered set of values its fold can
    produce. Multiset representatives are used when the combining function is
    commutative, unless materialize_lists asks for every ordering.
    """
    sender, receiver = p.sender, p.receiver
    msgs = _values_only(sender, denote_expr(cfg, env, sender, p.msg))
    defaults = _values_only(receiver, denote_expr(cfg, env, receiver, p.default))
    combines = denote_expr(cfg, env, receiver, p.combine)
    if not combines:
        return []
    for c in combines:
        if not isinstance(c, Closure) or c.remaining != 2:
            raise ApplicationException(repr(c), f"combine on {p.channel} must take (accumulator, message)")

    msg_type = combine_msg_type(combines[0])
    cache: Dict[Tuple[Closure, Value], List[Value]] = {}
    per_receiver: List[List[Value]] = []
    for combine, default in zip(combines, defaults):
        key = (combine, default)
        if key not in cache:
            if combine.commutative and not materialize_lists:
                lists = netwk_multisets(cfg, sender, msgs, msg_type)
            else:
                lists = netwk(cfg, sender, msgs, msg_type)
            cache[key] = fold_outcomes(combine, default, lists)
        per_receiver.append(cache[key])
    logger.debug(f"Comm {p.channel}: outcome set sizes {[len(o) for o in per_receiver]}")
    return per_receiver


def denote_prog(cfg: Config, env: Env, p: Program, materialize_lists: bool = False) -> OutputSet:
    """
    The set of output records p can produce.

    ret returns a singleton, let binds over the bound program's outputs and a
    comm forms the cross product of every receiver's possible fold outcomes.
    """
    if isinstance(p, Ret):
        return frozenset({DistRecord.of({
            role: _values_only(role, denote_expr(cfg, env, role, e)) for role, e in p.record
        })})
    if isinstance(p, Let):
        outputs: Set[DistRecord] = set()
        for bound in sorted_outputs(denote_prog(cfg, env, p.bound, materialize_lists)):
            outputs |= denote_prog(cfg, {**env, p.name: bound}, p.body, materialize_lists)
        return frozenset(outputs)
    if isinstance(p, Comm):
        per_receiver = comm_outcomes(cfg, env, p, materialize_lists)
        return frozenset(
            DistRecord.of({p.receiver: combo}) for combo in itertools.product(*per_receiver)
        )
    raise TypeError(f"Not an HLL program: {p!r}")


def denote_closed(cfg: Config, p: Program, materialize_lists: bool = False) -> OutputSet:
    return denote_prog(cfg, {}, p, materialize_lists)
