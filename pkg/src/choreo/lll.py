"""
Choreo - Low-Level Node Language

Per-node programs as a free monad over two effects:

    Return(v)               finished with v
    SendThen(c, v, k)       send v on c, continue with k
    RcvThen(c, handler)     receive a message list on c, continue with handler(msgs)

Continuations are Kont / Handler objects: a Python callable plus a hashable
key naming what the callable computes. Node programs compare and hash by
those keys, which is what lets the global explorer recognize converging
interleavings.

Endpoint projection compiles an HLL program into one node program per good
node.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Iterable, List, Sequence, Set, Tuple, Union

from choreo.choreo_enums import LabelKind
from choreo.exceptions.application_exception import ApplicationException
from choreo.exceptions.semantics_exception import NotEnabledException
from choreo.hll import App, ChannelContext, ChannelId, Comm, Expr, Let, Lift, Program, Ret, Role, Var, VectorLit
from choreo.values import TT, Closure, Runtime, Value, as_closure, fold, value_to_json

logger = logging.getLogger(__name__)


# =============================================================================
# Node programs
# =============================================================================

class NodeProgram:
    """Base class of LLL node programs."""


@dataclass(frozen=True)
class Kont:
    """Value -> NodeProgram, identified by key."""
    fn: Callable[[Value], NodeProgram] = field(compare=False, repr=False)
    key: Hashable = None

    def __call__(self, v: Value) -> NodeProgram:
        return self.fn(v)


@dataclass(frozen=True)
class Handler:
    """Message list -> NodeProgram, identified by key."""
    fn: Callable[[Tuple[Value, ...]], NodeProgram] = field(compare=False, repr=False)
    key: Hashable = None

    def __call__(self, msgs: Sequence[Value]) -> NodeProgram:
        return self.fn(tuple(msgs))


def kont(fn: Callable[[Value], NodeProgram], key: Hashable = None) -> Kont:
    return Kont(fn, ("fn", id(fn)) if key is None else key)


def handler(fn: Callable[[Tuple[Value, ...]], NodeProgram], key: Hashable = None) -> Handler:
    return Handler(fn, ("fn", id(fn)) if key is None else key)


@dataclass(frozen=True)
class Return(NodeProgram):
    value: Value


@dataclass(frozen=True)
class SendThen(NodeProgram):
    channel: ChannelId
    msg: Value
    k: NodeProgram


@dataclass(frozen=True)
class RcvThen(NodeProgram):
    channel: ChannelId
    handler: Handler


def send(c: ChannelId, v: Value) -> NodeProgram:
    return SendThen(c, v, Return(TT))


def receive(c: ChannelId, default: Value, combine: Closure) -> NodeProgram:
    """Receive on c and return the fold of combine over the messages."""
    return RcvThen(c, Handler(
        lambda msgs: Return(fold(combine, default, msgs)),
        key=("fold", c, combine, default),
    ))


def bind(t: NodeProgram, f: Union[Kont, Callable[[Value], NodeProgram]]) -> NodeProgram:
    """Graft f onto every Return leaf of t."""
    if not isinstance(f, Kont):
        f = kont(f)
    if isinstance(t, Return):
        return f(t.value)
    if isinstance(t, SendThen):
        return SendThen(t.channel, t.msg, bind(t.k, f))
    if isinstance(t, RcvThen):
        h = t.handler
        return RcvThen(t.channel, Handler(lambda msgs: bind(h(msgs), f), key=("bind", h.key, f.key)))
    raise TypeError(f"Not a node program: {t!r}")


# =============================================================================
# Node labels and steps
# =============================================================================

@dataclass(frozen=True)
class NodeSend:
    channel: ChannelId
    value: Value

    @property
    def kind(self) -> LabelKind:
        return LabelKind.SEND


@dataclass(frozen=True)
class NodeReceive:
    channel: ChannelId
    msgs: Tuple[Value, ...]

    @property
    def kind(self) -> LabelKind:
        return LabelKind.RECEIVE


NodeLabel = Union[NodeSend, NodeReceive]


def node_step(t: NodeProgram, label: NodeLabel) -> NodeProgram:
    """
    Raises:
        NotEnabledException: the label does not match t's root.
    """
    if isinstance(label, NodeSend) and isinstance(t, SendThen):
        if t.channel != label.channel or t.msg != label.value:
            raise NotEnabledException(label, f"node is ready to send {t.msg!r} on {t.channel}")
        return t.k
    if isinstance(label, NodeReceive) and isinstance(t, RcvThen):
        if t.channel != label.channel:
            raise NotEnabledException(label, f"node is waiting on {t.channel}")
        return t.handler(label.msgs)
    raise NotEnabledException(label, f"node is at {type(t).__name__}")


def is_done(t: NodeProgram) -> bool:
    return isinstance(t, Return)


# =============================================================================
# Endpoint projection
# =============================================================================

LocalEnv = Dict[str, Value]


def eval_local(e: Expr, env: LocalEnv, index: int) -> Runtime:
    """Evaluate an expression at one node: role annotations drop out, literals select index."""
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Lift):
        return e.item if isinstance(e.item, Value) else as_closure(e.item)
    if isinstance(e, VectorLit):
        return e.items[index]
    if isinstance(e, App):
        fun = eval_local(e.fun, env, index)
        if not isinstance(fun, Closure):
            raise ApplicationException(repr(fun), "not a function")
        return fun.call(eval_local(e.arg, env, index))
    raise TypeError(f"Not an HLL expression: {e!r}")


def compile_node(p: Program, role: Role, index: int, env: LocalEnv) -> NodeProgram:
    if isinstance(p, Ret):
        record = p.as_dict()
        if role not in record:
            return Return(TT)
        return Return(eval_local(record[role], env, index))

    if isinstance(p, Let):
        body, name = p.body, p.name
        snapshot = tuple(sorted(env.items()))
        return bind(
            compile_node(p.bound, role, index, env),
            Kont(
                lambda v: compile_node(body, role, index, {**env, name: v}),
                key=("let", id(body), name, role, index, snapshot),
            ),
        )

    if isinstance(p, Comm):
        sends = role == p.sender
        receives = role == p.receiver
        rcv = None
        if receives:
            rcv = receive(p.channel, eval_local(p.default, env, index), eval_local(p.combine, env, index))
        if sends:
            msg = eval_local(p.msg, env, index)
            return SendThen(p.channel, msg, rcv if receives else Return(TT))
        return rcv if receives else Return(TT)

    raise TypeError(f"Not an HLL program: {p!r}")


@dataclass(frozen=True)
class NodeBuilder:
    """project(p, role, i): call with the node's local inputs to get its program."""
    program: Program
    role: Role
    index: int

    def __call__(self, env: LocalEnv = None) -> NodeProgram:
        return compile_node(self.program, self.role, self.index, dict(env or {}))


def project(p: Program, role: Role, index: int) -> NodeBuilder:
    return NodeBuilder(p, role, index)


# =============================================================================
# Channel ordering
# =============================================================================

def expected_actions(delta: ChannelContext, role: Role) -> List[Tuple[LabelKind, ChannelId]]:
    """The actions a node of role performs, in context order."""
    actions = []
    for entry in delta:
        if entry.sender == role:
            actions.append((LabelKind.SEND, entry.channel))
        if entry.receiver == role:
            actions.append((LabelKind.RECEIVE, entry.channel))
    return actions


def respects_order(labels: Sequence[NodeLabel], delta: ChannelContext, role: Role) -> bool:
    """
    True iff the node's labels are a prefix of the role's expected actions:
    channels in context order, send before receive on a channel the role
    both sends and receives on.
    """
    expected = expected_actions(delta, role)
    if len(labels) > len(expected):
        return False
    return all((label.kind, label.channel) == action for label, action in zip(labels, expected))


# =============================================================================
# Node traces
# =============================================================================

NodeTrace = Tuple[Tuple[NodeLabel, ...], Value]


def node_traces(
    t: NodeProgram,
    receive_options: Callable[[ChannelId], Iterable[Sequence[Value]]],
) -> Set[NodeTrace]:
    """
    Every maximal label sequence of t together with its return value.

    receive_options supplies the message lists to try at each receive, which
    keeps the enumeration finite.
    """
    traces: Set[NodeTrace] = set()
    stack: List[Tuple[NodeProgram, Tuple[NodeLabel, ...]]] = [(t, ())]
    while stack:
        node, labels = stack.pop()
        if isinstance(node, Return):
            traces.add((labels, node.value))
        elif isinstance(node, SendThen):
            stack.append((node.k, labels + (NodeSend(node.channel, node.msg),)))
        else:
            for msgs in receive_options(node.channel):
                label = NodeReceive(node.channel, tuple(msgs))
                stack.append((node.handler(label.msgs), labels + (label,)))
    return traces


def node_label_to_json(label: NodeLabel) -> dict:
    if isinstance(label, NodeSend):
        return {"kind": label.kind.value, "chan": str(label.channel), "v": value_to_json(label.value)}
    return {"kind": label.kind.value, "chan": str(label.channel), "msgs": [value_to_json(v) for v in label.msgs]}


def node_trace_to_jsonl(node: object, labels: Sequence[NodeLabel]) -> str:
    """One JSON object per line: {"node": "R/2", "label": {...}}."""
    return "".join(
        json.dumps({"node": str(node), "label": node_label_to_json(label)}, sort_keys=True) + "\n"
        for label in labels
    )
