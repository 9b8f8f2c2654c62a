"""
Choreo - High-Level Choreographic Language

One global program describes every role. Expressions are situated at a role;
programs return records, bind sub-programs with let, or communicate over a
single-use channel:

    comm c msg default combine

Every sender-role node sends msg on c. Every receiver-role node folds combine
over the messages it receives, starting from default.

Variables are plain names. Rebinding a name that is already in scope is a
typing error, so substitution never captures.

Example (SimpleVote):
    let cnt := comm c x_R 0_L (fcnteq p_L) in
    ret {L -> calc_dec cnt_L p_L}
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.exceptions.typing_exception import (
    ApplicationMismatchException,
    BodyMismatchException,
    ChannelReuseException,
    ReturnTypeException,
    RoleMismatchException,
    RoleNotInRecordException,
    ShadowedVariableException,
    UnknownVariableException,
)
from choreo.values import (
    Callee,
    Closure,
    FnType,
    PureFn,
    Type,
    Value,
    ValueType,
    inhabits,
    type_to_json,
    value_to_json,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Names
# =============================================================================

@dataclass(frozen=True, order=True)
class Role:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class ChannelId:
    """A channel name plus the iteration index it was freshened with."""
    name: str
    fresh: int = 0

    def __str__(self) -> str:
        return f"{self.name}.{self.fresh}"

    def shifted(self, offset: int) -> 'ChannelId':
        return ChannelId(self.name, self.fresh + offset)

    @classmethod
    def parse(cls, text: str) -> 'ChannelId':
        name, _, fresh = text.rpartition(".")
        if not name or not fresh.isdigit():
            raise ConfigurationException(f"Cannot parse channel id '{text}'.")
        return cls(name, int(fresh))


# =============================================================================
# Expressions
# =============================================================================

class Expr:
    """Base class of situated expressions."""


@dataclass(frozen=True)
class Var(Expr):
    name: str
    at: Role


@dataclass(frozen=True)
class Lift(Expr):
    """A constant or pure function replicated at every node of a role."""
    item: Union[Value, PureFn, Closure]
    at: Role


@dataclass(frozen=True)
class VectorLit(Expr):
    """One value per good node of the role. Only closing inputs uses these."""
    items: Tuple[Value, ...]
    at: Role
    item_type: ValueType


@dataclass(frozen=True)
class App(Expr):
    fun: Expr
    arg: Expr


def role_of(e: Expr) -> Role:
    """The role an expression is situated at, read off its leftmost leaf."""
    while isinstance(e, App):
        e = e.fun
    return e.at


def head_callee(e: Expr) -> Optional[Callee]:
    """The lifted function at the head of an application spine, if any."""
    while isinstance(e, App):
        e = e.fun
    if isinstance(e, Lift) and isinstance(e.item, (PureFn, Closure)):
        return e.item
    return None


# =============================================================================
# Programs
# =============================================================================

class Program:
    """Base class of HLL programs."""


@dataclass(frozen=True)
class Ret(Program):
    record: Tuple[Tuple[Role, Expr], ...]

    def as_dict(self) -> Dict[Role, Expr]:
        return dict(self.record)

    @property
    def roles(self) -> Tuple[Role, ...]:
        return tuple(role for role, _ in self.record)


@dataclass(frozen=True)
class Let(Program):
    name: str
    bound: Program
    body: Program


@dataclass(frozen=True)
class Comm(Program):
    channel: ChannelId
    msg: Expr
    default: Expr
    combine: Expr

    @property
    def sender(self) -> Role:
        return role_of(self.msg)

    @property
    def receiver(self) -> Role:
        return role_of(self.default)


# =============================================================================
# Builders
# =============================================================================

def var(name: str, at: Role) -> Var:
    return Var(name, at)


def lift(item: Union[Value, PureFn, Closure], at: Role) -> Lift:
    return Lift(item, at)


def vec(items: Sequence[Value], at: Role, item_type: ValueType) -> VectorLit:
    return VectorLit(tuple(items), at, item_type)


def app(fun: Expr, *args: Expr) -> Expr:
    """Left-associated application: app(f, a, b) == App(App(f, a), b)."""
    e = fun
    for arg in args:
        e = App(e, arg)
    return e


def ret(record: Mapping[Role, Expr]) -> Ret:
    return Ret(tuple(sorted(record.items(), key=lambda item: item[0])))


def let(name: str, bound: Program, body: Program) -> Let:
    return Let(name, bound, body)


def comm(channel: Union[ChannelId, str], msg: Expr, default: Expr, combine: Expr) -> Comm:
    if isinstance(channel, str):
        channel = ChannelId(channel)
    return Comm(channel, msg, default, combine)


def lets(bindings: Sequence[Tuple[str, Program]], final: Program) -> Program:
    """Right-nested chain of lets."""
    p = final
    for name, bound in reversed(bindings):
        p = Let(name, bound, p)
    return p


# =============================================================================
# Typing
# =============================================================================

RecordType = Dict[Role, ValueType]
TypeEnv = Dict[str, RecordType]


@dataclass(frozen=True)
class ChannelEntry:
    channel: ChannelId
    sender: Role
    receiver: Role
    msg_type: ValueType

    def __str__(self) -> str:
        return f"{self.channel}:({self.sender},{self.receiver},{self.msg_type})"


ChannelContext = Tuple[ChannelEntry, ...]


def _lifted_type(item: Union[Value, PureFn, Closure]) -> Type:
    if isinstance(item, Value):
        return item.type
    return item.fn_type


def typecheck_expr(gamma: TypeEnv, role: Role, e: Expr) -> Type:
    """
    Derive the type of e situated at role.

    Args:
        gamma: Variable -> record type
        role: Role the expression must be situated at
        e: Expression to check

    Returns:
        The expression's type (a FnType for partially applied functions)

    Raises:
        UnknownVariableException, RoleNotInRecordException,
        RoleMismatchException, ApplicationMismatchException
    """
    if isinstance(e, Var):
        if e.at != role:
            raise RoleMismatchException(role, e.at, f"Variable '{e.name}'.")
        if e.name not in gamma:
            raise UnknownVariableException(e.name)
        record = gamma[e.name]
        if role not in record:
            raise RoleNotInRecordException(e.name, role)
        return record[role]

    if isinstance(e, Lift):
        if e.at != role:
            raise RoleMismatchException(role, e.at, f"Lifted {e.item!r}.")
        return _lifted_type(e.item)

    if isinstance(e, VectorLit):
        if e.at != role:
            raise RoleMismatchException(role, e.at, "Vector literal.")
        for item in e.items:
            if not inhabits(item, e.item_type):
                raise ApplicationMismatchException(e.item_type, item.type)
        return e.item_type

    if isinstance(e, App):
        fun_type = typecheck_expr(gamma, role, e.fun)
        arg_type = typecheck_expr(gamma, role, e.arg)
        if not isinstance(fun_type, FnType) or fun_type.param != arg_type:
            raise ApplicationMismatchException(fun_type, arg_type)
        return fun_type.result

    raise TypeError(f"Not an HLL expression: {e!r}")


def typecheck_prog(gamma: TypeEnv, roles: Iterable[Role], p: Program) -> Tuple[ChannelContext, RecordType]:
    """
    Derive the ordered channel context and result record type of p.

    Let concatenates the contexts of its two sides, which must be disjoint.
    """
    role_set = frozenset(roles)

    if isinstance(p, Ret):
        result: RecordType = {}
        for role, e in p.record:
            if role not in role_set:
                raise ReturnTypeException(f"Role {role} is not part of the role set.")
            t = typecheck_expr(gamma, role, e)
            if not isinstance(t, ValueType):
                raise ReturnTypeException(f"Role {role} would return a function of type {t}.")
            result[role] = t
        return (), result

    if isinstance(p, Let):
        if p.name in gamma:
            raise ShadowedVariableException(p.name)
        delta1, bound_type = typecheck_prog(gamma, role_set, p.bound)
        delta2, result = typecheck_prog({**gamma, p.name: bound_type}, role_set, p.body)
        reused = {e.channel for e in delta1} & {e.channel for e in delta2}
        if reused:
            raise ChannelReuseException(sorted(reused))
        return delta1 + delta2, result

    if isinstance(p, Comm):
        sender, receiver = p.sender, p.receiver
        for role in (sender, receiver):
            if role not in role_set:
                raise ReturnTypeException(f"Role {role} is not part of the role set.")
        msg_type = typecheck_expr(gamma, sender, p.msg)
        if not isinstance(msg_type, ValueType):
            raise ApplicationMismatchException(msg_type, msg_type)
        acc_type = typecheck_expr(gamma, receiver, p.default)
        fun_type = typecheck_expr(gamma, receiver, p.combine)
        if fun_type != FnType(acc_type, FnType(msg_type, acc_type)):
            raise ApplicationMismatchException(fun_type, acc_type)
        return (ChannelEntry(p.channel, sender, receiver, msg_type),), {receiver: acc_type}

    raise TypeError(f"Not an HLL program: {p!r}")


# =============================================================================
# Substitution and traversal
# =============================================================================

def subst_expr(e: Expr, name: str, record: Mapping[Role, Expr]) -> Expr:
    if isinstance(e, Var):
        if e.name != name:
            return e
        if e.at not in record:
            raise RoleNotInRecordException(name, e.at, "Substituted record has no such field.")
        return record[e.at]
    if isinstance(e, App):
        return App(subst_expr(e.fun, name, record), subst_expr(e.arg, name, record))
    return e


def substitute(p: Program, name: str, record: Mapping[Role, Expr]) -> Program:
    """Replace every x@R in p by record[R]."""
    if isinstance(p, Ret):
        return Ret(tuple((role, subst_expr(e, name, record)) for role, e in p.record))
    if isinstance(p, Let):
        bound = substitute(p.bound, name, record)
        # Scope ends at a rebinding
        body = p.body if p.name == name else substitute(p.body, name, record)
        return Let(p.name, bound, body)
    if isinstance(p, Comm):
        return Comm(
            p.channel,
            subst_expr(p.msg, name, record),
            subst_expr(p.default, name, record),
            subst_expr(p.combine, name, record),
        )
    raise TypeError(f"Not an HLL program: {p!r}")


def free_channels(p: Program) -> List[ChannelId]:
    """Channels in program order, which is also the order of the typing context."""
    if isinstance(p, Comm):
        return [p.channel]
    if isinstance(p, Let):
        return free_channels(p.bound) + free_channels(p.body)
    return []


def program_roles(p: Program) -> Set[Role]:
    if isinstance(p, Ret):
        return set(p.roles)
    if isinstance(p, Let):
        return program_roles(p.bound) | program_roles(p.body)
    return {p.sender, p.receiver}


def bound_names(p: Program) -> Set[str]:
    if isinstance(p, Let):
        return {p.name} | bound_names(p.bound) | bound_names(p.body)
    return set()


def _rename_expr(e: Expr, names: Mapping[str, str]) -> Expr:
    if isinstance(e, Var) and e.name in names:
        return Var(names[e.name], e.at)
    if isinstance(e, App):
        return App(_rename_expr(e.fun, names), _rename_expr(e.arg, names))
    return e


def rename(p: Program, names: Mapping[str, str], channel_offset: int = 0) -> Program:
    """Rename variables (binders and uses) and shift every channel's fresh index."""
    if isinstance(p, Ret):
        return Ret(tuple((role, _rename_expr(e, names)) for role, e in p.record))
    if isinstance(p, Let):
        return Let(
            names.get(p.name, p.name),
            rename(p.bound, names, channel_offset),
            rename(p.body, names, channel_offset),
        )
    if isinstance(p, Comm):
        return Comm(
            p.channel.shifted(channel_offset),
            _rename_expr(p.msg, names),
            _rename_expr(p.default, names),
            _rename_expr(p.combine, names),
        )
    raise TypeError(f"Not an HLL program: {p!r}")


# =============================================================================
# Let-comm normal form
# =============================================================================

def comm_binder(c: ChannelId) -> str:
    """Name bound to the result of a bare comm by normalization."""
    return f"_{c.name}{c.fresh}"


def normalize(p: Program) -> Program:
    """
    Rewrite p into a chain of let-bound comms ending in a ret.

    Rules:
        ret r                        ~> ret r
        comm ...                     ~> let _c := comm ... in ret {R -> _c@R}
        let x := ret r in q          ~> normalize(q[r/x])
        let x := comm ... in q       ~> let x := comm ... in normalize(q)
        let x := (let y := a in b) in c  ~> normalize(let y := a in let x := b in c)
    """
    if isinstance(p, Ret):
        return p
    if isinstance(p, Comm):
        name = comm_binder(p.channel)
        return Let(name, p, Ret(((p.receiver, Var(name, p.receiver)),)))
    if isinstance(p, Let):
        bound = p.bound
        if isinstance(bound, Ret):
            return normalize(substitute(p.body, p.name, bound.as_dict()))
        if isinstance(bound, Comm):
            return Let(p.name, bound, normalize(p.body))
        if isinstance(bound, Let):
            return normalize(Let(bound.name, bound.bound, Let(p.name, bound.body, p.body)))
    raise TypeError(f"Not an HLL program: {p!r}")


def is_normal(p: Program) -> bool:
    while isinstance(p, Let):
        if not isinstance(p.bound, Comm):
            return False
        p = p.body
    return isinstance(p, Ret)


# =============================================================================
# Protocol bodies, concatenation and iteration
# =============================================================================

@dataclass(frozen=True)
class ProtocolBody:
    """
    A loop body: fresh channels, one distributed input, one program.

    threading maps each role of the output that feeds the next iteration to
    the function extracting that role's next input (None keeps the value).
    Output roles absent from threading are not passed on.
    """
    param: str
    input_type: Tuple[Tuple[Role, ValueType], ...]
    program: Program
    threading: Tuple[Tuple[Role, Optional[Callee]], ...]

    @property
    def channels(self) -> List[ChannelId]:
        return free_channels(self.program)

    @property
    def input_record(self) -> RecordType:
        return dict(self.input_type)

    @property
    def roles(self) -> Set[Role]:
        return (
            {role for role, _ in self.input_type}
            | {role for role, _ in self.threading}
            | program_roles(self.program)
        )

    def typecheck(self, roles: Optional[Iterable[Role]] = None) -> Tuple[ChannelContext, RecordType]:
        roles = self.roles if roles is None else roles
        return typecheck_prog({self.param: self.input_record}, roles, self.program)

    def threaded_type(self, output: RecordType) -> RecordType:
        threaded: RecordType = {}
        for role, callee in self.threading:
            if role not in output:
                raise BodyMismatchException(f"Threading reads role {role}, which the body does not return.")
            if callee is None:
                threaded[role] = output[role]
                continue
            fn_type = callee.fn_type
            if not isinstance(fn_type, FnType) or fn_type.param != output[role]:
                raise BodyMismatchException(f"Threading function {callee!r} does not accept {output[role]}.")
            threaded[role] = fn_type.result
        return threaded

    def instantiate(self, index: int) -> 'ProtocolBody':
        """
        A copy for iteration index: channel fresh indices shift by index and,
        for index > 0, every bound name (the parameter included) gets the
        suffix _<index>.
        """
        if index == 0:
            return self
        names = {name: f"{name}_{index}" for name in bound_names(self.program) | {self.param}}
        return replace(
            self,
            param=names[self.param],
            program=rename(self.program, names, channel_offset=index),
        )


def _thread_expr(callee: Optional[Callee], e: Expr, role: Role) -> Expr:
    return e if callee is None else App(Lift(callee, role), e)


def _monadic_subst(p: Program, param: str, threading: Mapping[Role, Optional[Callee]], cont: Program) -> Program:
    if isinstance(p, Ret):
        record = p.as_dict()
        missing = [role for role in threading if role not in record]
        if missing:
            raise BodyMismatchException(f"Body returns no value for threaded role(s) {missing}.")
        return substitute(cont, param, {
            role: _thread_expr(callee, record[role], role) for role, callee in threading.items()
        })
    if isinstance(p, Let):
        return Let(p.name, p.bound, _monadic_subst(p.body, param, threading, cont))
    if isinstance(p, Comm):
        if all(callee is None for callee in threading.values()):
            return Let(param, p, cont)
        name = comm_binder(p.channel)
        return Let(name, p, substitute(cont, param, {
            role: _thread_expr(callee, Var(name, role), role) for role, callee in threading.items()
        }))
    raise TypeError(f"Not an HLL program: {p!r}")


def concat(b1: ProtocolBody, b2: ProtocolBody) -> ProtocolBody:
    """
    b1 ++ b2: run b1, thread its output into b2's parameter.

    If b2 reuses a channel or a name of b1, b2 is first instantiated past
    b1's highest fresh index.

    Raises:
        BodyMismatchException: b1's threaded output type is not b2's input type.
    """
    names1 = bound_names(b1.program) | {b1.param}
    names2 = bound_names(b2.program) | {b2.param}
    if set(b1.channels) & set(b2.channels) or names1 & names2:
        offset = 1 + max((c.fresh for c in b1.channels), default=0)
        b2 = b2.instantiate(offset)

    roles = b1.roles | b2.roles
    _, out1 = b1.typecheck(roles)
    if b1.threaded_type(out1) != b2.input_record:
        raise BodyMismatchException(
            f"Output {b1.threaded_type(out1)} of the first body does not match input {b2.input_record} of the second."
        )
    program = _monadic_subst(b1.program, b2.param, dict(b1.threading), b2.program)
    return ProtocolBody(b1.param, b1.input_type, program, b2.threading)


def iterate(b: ProtocolBody, k: int) -> ProtocolBody:
    """
    Unroll b for k + 1 iterations: b^0 = b, b^(k+1) = b ++ b^k.

    Iteration j uses channels with fresh index j, so the context of the result
    lists every iteration's channels in order.
    """
    if k < 0:
        raise ConfigurationException(f"Iteration count must be non-negative, got {k}.")
    acc = b.instantiate(k)
    for j in range(k - 1, -1, -1):
        acc = concat(b.instantiate(j), acc)
    logger.debug(f"Unrolled body into {len(acc.channels)} channel(s) over {k + 1} iteration(s)")
    return acc


# =============================================================================
# Closing over inputs
# =============================================================================

def close_program(
    p: Program,
    inputs: Mapping[str, Mapping[Role, Sequence[Value]]],
    input_types: TypeEnv,
) -> Program:
    """
    Bind every free input through vector literals.

    close_program(p, {"x": {R: [v1, v2]}}, {"x": {R: bool}}) is
    let x := ret {R -> [v1, v2]} in p.
    """
    closed = p
    for name in sorted(inputs, reverse=True):
        record = {
            role: VectorLit(tuple(values), role, input_types[name][role])
            for role, values in inputs[name].items()
        }
        closed = Let(name, ret(record), closed)
    return closed


def close_body(body: ProtocolBody, inputs: Mapping[Role, Sequence[Value]]) -> Program:
    return close_program(body.program, {body.param: inputs}, {body.param: body.input_record})


# =============================================================================
# JSON debug dump
# =============================================================================

def _item_to_json(item: Union[Value, PureFn, Closure]) -> dict:
    if isinstance(item, Value):
        return {"value": value_to_json(item)}
    if isinstance(item, PureFn):
        return {"fn": item.name}
    return {"fn": item.fn.name, "bound": [value_to_json(v) for v in item.bound]}


def expr_to_json(e: Expr) -> dict:
    if isinstance(e, Var):
        return {"var": e.name, "at": str(e.at)}
    if isinstance(e, Lift):
        return {"lift": _item_to_json(e.item), "at": str(e.at)}
    if isinstance(e, VectorLit):
        return {"vec": [value_to_json(v) for v in e.items], "at": str(e.at), "type": type_to_json(e.item_type)}
    return {"app": [expr_to_json(e.fun), expr_to_json(e.arg)]}


def program_to_json(p: Program) -> dict:
    """Debug dump. There is no parser for it."""
    if isinstance(p, Ret):
        return {"ret": {str(role): expr_to_json(e) for role, e in p.record}}
    if isinstance(p, Let):
        return {"let": p.name, "bound": program_to_json(p.bound), "body": program_to_json(p.body)}
    return {
        "comm": str(p.channel),
        "msg": expr_to_json(p.msg),
        "default": expr_to_json(p.default),
        "combine": expr_to_json(p.combine),
    }
