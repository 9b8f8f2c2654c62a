"""
Choreo - Global Transition System

Composes the projected node programs with one channel state per entry of the
channel context. A global label moves at most one node and exactly one
channel:

    SendL(node, c, v)          node sends v, channel c records it
    ByzL(c, sb, r, v)          Byzantine sb sends v to r on c; no node moves
    ReceiveL(node, c, msgs)    node receives msgs on c

Also here:
  - breadth-first exhaustive exploration, recorded as a networkx MultiDiGraph
    so any reached state can be turned back into a trace
  - seeded random walks
  - label projections, alignment and permissibility replay
  - the big-step runner and the adequacy check comparing all of the above to
    the denotation
"""

from __future__ import annotations

import itertools
import logging
import random
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from choreo.channel import (
    ChanByzSend,
    ChannelLabel,
    ChannelSpec,
    ChannelState,
    ChanReceive,
    ChanSend,
    byz_labels,
    channel_step,
    receive_options,
)
from choreo.choreo_enums import LabelKind
from choreo.constants import DEFAULT_MAX_DEPTH, DEFAULT_MAX_SECONDS, DEFAULT_MAX_STATES
from choreo.denote import (
    Config,
    DistRecord,
    NodeId,
    OutputSet,
    denote_closed,
    denote_expr,
    denote_prog,
    output_set_to_json,
    sorted_outputs,
)
from choreo.exceptions.budget_exceeded_exception import BudgetExceededException
from choreo.exceptions.choreo_exception import ChoreoException
from choreo.exceptions.configuration_exception import ConfigurationException
from choreo.exceptions.semantics_exception import NotCompletedException, NotEnabledException
from choreo.exceptions.trace_format_exception import TraceFormatException
from choreo.hll import (
    ChannelContext,
    ChannelId,
    Comm,
    Let,
    Program,
    Ret,
    Role,
    VectorLit,
    head_callee,
    is_normal,
    normalize,
    substitute,
    typecheck_prog,
)
from choreo.lll import NodeProgram, NodeReceive, NodeSend, RcvThen, Return, SendThen, node_step, project
from choreo.report import CheckReport
from choreo.values import Value, enumerate_values, fold, sort_key, value_from_json, value_to_json

logger = logging.getLogger(__name__)


# =============================================================================
# Labels
# =============================================================================

@dataclass(frozen=True)
class SendL:
    node: NodeId
    channel: ChannelId
    value: Value

    kind = LabelKind.SEND

    def __str__(self) -> str:
        return f"send {self.node} {self.channel} {self.value!r}"


@dataclass(frozen=True)
class ByzL:
    channel: ChannelId
    byz_sender: NodeId
    receiver: NodeId
    value: Value

    kind = LabelKind.BYZ_SEND

    def __str__(self) -> str:
        return f"byz {self.channel} {self.byz_sender}->{self.receiver} {self.value!r}"


@dataclass(frozen=True)
class ReceiveL:
    node: NodeId
    channel: ChannelId
    msgs: Tuple[Value, ...]

    kind = LabelKind.RECEIVE

    def __str__(self) -> str:
        return f"receive {self.node} {self.channel} [{', '.join(repr(v) for v in self.msgs)}]"


GlobalLabel = Union[SendL, ByzL, ReceiveL]
Component = Union[NodeId, ChannelId]


# =============================================================================
# System and state
# =============================================================================

@dataclass(frozen=True)
class GlobalState:
    """Node programs aligned with GlobalSystem.node_ids, channel states aligned with its context."""
    nodes: Tuple[NodeProgram, ...]
    channels: Tuple[ChannelState, ...]


@dataclass(frozen=True, eq=False)
class GlobalSystem:
    program: Program
    config: Config
    delta: ChannelContext
    result_roles: Tuple[Role, ...]
    node_ids: Tuple[NodeId, ...]
    specs: Tuple[ChannelSpec, ...]
    commutative: Tuple[bool, ...]
    initial: GlobalState

    def node_index(self, node: NodeId) -> int:
        try:
            return self.node_ids.index(node)
        except ValueError:
            raise NotEnabledException(node, f"{node} is not a good node of this system") from None

    def channel_index(self, c: ChannelId) -> int:
        for i, spec in enumerate(self.specs):
            if spec.channel == c:
                return i
        raise NotEnabledException(c, f"{c} is not in the channel context")

    def spec(self, c: ChannelId) -> ChannelSpec:
        return self.specs[self.channel_index(c)]

    @property
    def components(self) -> List[Component]:
        return list(self.node_ids) + [spec.channel for spec in self.specs]


def _comms(p: Program) -> List[Comm]:
    if isinstance(p, Comm):
        return [p]
    if isinstance(p, Let):
        return _comms(p.bound) + _comms(p.body)
    return []


def _check_literals(p: Program, cfg: Config):
    def walk_expr(e):
        if isinstance(e, VectorLit) and len(e.items) != cfg[e.at].g:
            raise ConfigurationException(
                f"Vector literal at {e.at} has {len(e.items)} item(s) but the role has {cfg[e.at].g} good node(s)."
            )
        for child in (getattr(e, "fun", None), getattr(e, "arg", None)):
            if child is not None:
                walk_expr(child)

    if isinstance(p, Ret):
        for _, e in p.record:
            walk_expr(e)
    elif isinstance(p, Let):
        _check_literals(p.bound, cfg)
        _check_literals(p.body, cfg)
    elif isinstance(p, Comm):
        for e in (p.msg, p.default, p.combine):
            walk_expr(e)


def global_compile(p: Program, cfg: Config) -> GlobalSystem:
    """
    Project a closed program onto every good node and pair it with empty channels.

    Raises:
        TypingException: p is open or ill-typed.
        ConfigurationException: a vector literal disagrees with the configuration.
    """
    delta, result = typecheck_prog({}, cfg.role_names, p)
    _check_literals(p, cfg)
    node_ids = tuple(cfg.good_nodes())
    nodes = tuple(project(p, node.role, node.index)() for node in node_ids)
    specs = tuple(ChannelSpec.from_entry(entry, cfg) for entry in delta)

    comm_by_channel = {c.channel: c for c in _comms(p)}
    commutative = tuple(
        bool(getattr(head_callee(comm_by_channel[entry.channel].combine), "commutative", False))
        for entry in delta
    )
    initial = GlobalState(nodes, tuple(ChannelState.initial(spec) for spec in specs))
    logger.debug(f"Compiled {len(node_ids)} node(s) and {len(specs)} channel(s)")
    return GlobalSystem(p, cfg, delta, tuple(sorted(result)), node_ids, specs, commutative, initial)


def is_completed(s: GlobalState) -> bool:
    return all(isinstance(node, Return) for node in s.nodes)


def extract(sys: GlobalSystem, s: GlobalState) -> DistRecord:
    """
    Per-role vectors of returned values, ordered by good-node index.

    Raises:
        NotCompletedException
    """
    pending = [node_id for node_id, node in zip(sys.node_ids, s.nodes) if not isinstance(node, Return)]
    if pending:
        raise NotCompletedException(pending)
    vectors: Dict[Role, List[Value]] = {}
    for node_id, node in zip(sys.node_ids, s.nodes):
        vectors.setdefault(node_id.role, []).append(node.value)
    return DistRecord.of(vectors)


# =============================================================================
# Transitions
# =============================================================================

def _replace_at(items: tuple, i: int, item) -> tuple:
    return items[:i] + (item,) + items[i + 1:]


def global_step(sys: GlobalSystem, s: GlobalState, label: GlobalLabel) -> GlobalState:
    """
    Step the node and channel a label names; everything else is unchanged.

    Raises:
        NotEnabledException
    """
    ci = sys.channel_index(label.channel)
    spec = sys.specs[ci]
    if isinstance(label, ByzL):
        channel = channel_step(spec, s.channels[ci], ChanByzSend(label.byz_sender, label.receiver, label.value))
        return GlobalState(s.nodes, _replace_at(s.channels, ci, channel))

    ni = sys.node_index(label.node)
    if isinstance(label, SendL):
        node = node_step(s.nodes[ni], NodeSend(label.channel, label.value))
        channel = channel_step(spec, s.channels[ci], ChanSend(label.node, label.value))
    elif isinstance(label, ReceiveL):
        # Channel first: its premises guard the handler
        channel = channel_step(spec, s.channels[ci], ChanReceive(label.node, label.msgs))
        node = node_step(s.nodes[ni], NodeReceive(label.channel, label.msgs))
    else:
        raise TypeError(f"Not a global label: {label!r}")
    return GlobalState(_replace_at(s.nodes, ni, node), _replace_at(s.channels, ci, channel))


def enabled(
    sys: GlobalSystem,
    s: GlobalState,
    dedup_receives: bool = False,
    after_receive: bool = False,
) -> List[GlobalLabel]:
    """
    Labels enabled at s, nodes first, then Byzantine sends per channel.

    dedup_receives keeps one message order per multiset on channels whose
    combining function is commutative.
    """
    labels: List[GlobalLabel] = []
    for node_id, node in zip(sys.node_ids, s.nodes):
        if isinstance(node, SendThen):
            ci = sys.channel_index(node.channel)
            if node_id in sys.specs[ci].senders and node_id not in s.channels[ci].sent:
                labels.append(SendL(node_id, node.channel, node.msg))
        elif isinstance(node, RcvThen):
            ci = sys.channel_index(node.channel)
            commutative = dedup_receives and sys.commutative[ci]
            for msgs in receive_options(sys.specs[ci], s.channels[ci], node_id, commutative):
                labels.append(ReceiveL(node_id, node.channel, msgs))
    for spec, st in zip(sys.specs, s.channels):
        for b in byz_labels(spec, st, after_receive):
            labels.append(ByzL(spec.channel, b.byz_sender, b.receiver, b.value))
    return labels


def successors(
    sys: GlobalSystem,
    s: GlobalState,
    dedup_receives: bool = True,
    after_receive: bool = False,
) -> List[Tuple[GlobalLabel, GlobalState]]:
    return [(label, global_step(sys, s, label)) for label in enabled(sys, s, dedup_receives, after_receive)]


# =============================================================================
# Exhaustive exploration
# =============================================================================

@dataclass(frozen=True)
class Budget:
    max_states: int = DEFAULT_MAX_STATES
    max_depth: int = DEFAULT_MAX_DEPTH
    seconds: float = DEFAULT_MAX_SECONDS

    def __post_init__(self):
        if self.max_states <= 0 or self.max_depth <= 0 or self.seconds <= 0:
            raise ConfigurationException("Exploration budgets must be positive.")


@dataclass
class Exploration:
    """
    The explored part of the state graph. Nodes are integer ids carrying a
    'state' attribute; edges carry their 'label'.
    """
    system: GlobalSystem
    graph: nx.MultiDiGraph
    root: int
    completed: Dict[int, DistRecord]
    stuck: List[int] = field(default_factory=list)
    exhaustive: bool = True
    depth: int = 0

    @property
    def num_states(self) -> int:
        return self.graph.number_of_nodes()

    def state(self, node: int) -> GlobalState:
        return self.graph.nodes[node]["state"]

    @property
    def outputs(self) -> OutputSet:
        return frozenset(self.completed.values())

    def outputs_for(self, roles: Sequence[Role]) -> OutputSet:
        return frozenset(record.restrict(roles) for record in self.completed.values())

    def trace_to(self, node: int) -> List[GlobalLabel]:
        """A shortest label sequence from the initial state to node."""
        path = nx.shortest_path(self.graph, self.root, node)
        labels = []
        for u, v in zip(path, path[1:]):
            edges = self.graph.get_edge_data(u, v)
            labels.append(edges[min(edges)]["label"])
        return labels

    def random_trace(self, rng: random.Random) -> List[GlobalLabel]:
        """Random walk along recorded edges until a state with no successors."""
        node, labels = self.root, []
        while True:
            out = sorted(self.graph.out_edges(node, keys=True, data="label"), key=lambda e: (e[1], e[2]))
            if not out:
                return labels
            _, node, _, label = rng.choice(out)
            labels.append(label)


def explore(
    sys: GlobalSystem,
    budget: Budget = Budget(),
    jobs: int = 1,
    dedup_states: bool = True,
    dedup_receives: bool = True,
    after_receive: bool = False,
) -> Exploration:
    """
    Breadth-first search over every permissible trace.

    Frontier levels may be expanded by a thread pool; successors are merged in
    frontier order, so results do not depend on jobs.

    Raises:
        BudgetExceededException: carries the partial, non-exhaustive Exploration.
    """
    start = time.monotonic()
    graph = nx.MultiDiGraph()
    ids: Dict[GlobalState, int] = {}
    completed: Dict[int, DistRecord] = {}

    def add(state: GlobalState) -> Tuple[int, bool]:
        if dedup_states and state in ids:
            return ids[state], False
        nid = graph.number_of_nodes()
        graph.add_node(nid, state=state)
        if dedup_states:
            ids[state] = nid
        if is_completed(state):
            completed[nid] = extract(sys, state)
        return nid, True

    def expand(state: GlobalState):
        return successors(sys, state, dedup_receives, after_receive)

    root, _ = add(sys.initial)
    result = Exploration(sys, graph, root, completed)
    frontier = [root]
    executor = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None

    def exceeded(reason: str) -> BudgetExceededException:
        result.exhaustive = False
        logger.warning(f"Exploration stopped early ({reason}) after {graph.number_of_nodes()} state(s)")
        return BudgetExceededException(reason, partial=result)

    try:
        while frontier:
            if result.depth >= budget.max_depth:
                raise exceeded(f"max depth {budget.max_depth}")
            states = [graph.nodes[nid]["state"] for nid in frontier]
            expanded = list(executor.map(expand, states)) if executor else [expand(st) for st in states]
            next_frontier = []
            for nid, succ in zip(frontier, expanded):
                if not succ and nid not in completed:
                    result.stuck.append(nid)
                for label, nxt in succ:
                    tid, new = add(nxt)
                    graph.add_edge(nid, tid, label=label)
                    if new:
                        next_frontier.append(tid)
                if graph.number_of_nodes() > budget.max_states:
                    raise exceeded(f"max states {budget.max_states}")
                if time.monotonic() - start > budget.seconds:
                    raise exceeded(f"{budget.seconds}s wall clock")
            logger.debug(f"Depth {result.depth}: {len(frontier)} expanded, {len(next_frontier)} new")
            frontier = next_frontier
            result.depth += 1
    finally:
        if executor:
            executor.shutdown()

    if result.stuck:
        logger.warning(f"{len(result.stuck)} state(s) have no enabled label but are not completed")
    logger.info(
        f"Explored {graph.number_of_nodes()} state(s), {graph.number_of_edges()} transition(s), "
        f"{len(completed)} completed, {len(result.outputs)} distinct output(s)"
    )
    return result


# =============================================================================
# Random walks
# =============================================================================

def simulate(
    sys: GlobalSystem,
    seed: int,
    after_receive: bool = False,
) -> Tuple[List[GlobalLabel], GlobalState]:
    """
    One seeded random maximal trace.

    Each step picks uniformly among pending sends, nodes able to receive and
    Byzantine sends; a receiving node then takes a random-length random
    selection of its mailbox.
    """
    rng = random.Random(seed)
    state, labels = sys.initial, []
    while True:
        choices: List[Union[GlobalLabel, Tuple[NodeId, int]]] = []
        for node_id, node in zip(sys.node_ids, state.nodes):
            if isinstance(node, SendThen):
                ci = sys.channel_index(node.channel)
                if node_id not in state.channels[ci].sent:
                    choices.append(SendL(node_id, node.channel, node.msg))
            elif isinstance(node, RcvThen):
                ci = sys.channel_index(node.channel)
                if receive_options(sys.specs[ci], state.channels[ci], node_id, commutative=True):
                    choices.append((node_id, ci))
        for spec, st in zip(sys.specs, state.channels):
            choices.extend(ByzL(spec.channel, b.byz_sender, b.receiver, b.value)
                           for b in byz_labels(spec, st, after_receive))
        if not choices:
            return labels, state

        choice = rng.choice(choices)
        if isinstance(choice, tuple):
            node_id, ci = choice
            spec = sys.specs[ci]
            mailbox = state.channels[ci].mailbox[spec.receiver_index(node_id)]
            k = rng.randint(spec.lo, len(mailbox))
            choice = ReceiveL(node_id, spec.channel, tuple(rng.sample(mailbox, k)))
        state = global_step(sys, state, choice)
        labels.append(choice)


def sample_traces(sys: GlobalSystem, count: int, seed: int) -> List[List[GlobalLabel]]:
    return [simulate(sys, seed + i)[0] for i in range(count)]


# =============================================================================
# Projections, alignment, replay
# =============================================================================

def project_labels(labels: Sequence[GlobalLabel], component: Component):
    """The local labels of one node or one channel, in trace order."""
    local = []
    for label in labels:
        if isinstance(component, ChannelId):
            if label.channel != component:
                continue
            if isinstance(label, SendL):
                local.append(ChanSend(label.node, label.value))
            elif isinstance(label, ByzL):
                local.append(ChanByzSend(label.byz_sender, label.receiver, label.value))
            else:
                local.append(ChanReceive(label.node, label.msgs))
        else:
            if isinstance(label, ByzL) or label.node != component:
                continue
            if isinstance(label, SendL):
                local.append(NodeSend(label.channel, label.value))
            else:
                local.append(NodeReceive(label.channel, label.msgs))
    return local


def align(delta: ChannelContext, labels: Sequence[GlobalLabel]) -> List[GlobalLabel]:
    """Each channel's labels, contiguous, channels in context order."""
    return [label for entry in delta for label in labels if label.channel == entry.channel]


@dataclass(frozen=True)
class Replay:
    ok: bool
    state: GlobalState
    failed_at: Optional[int] = None
    reason: Optional[str] = None


def is_permissible(sys: GlobalSystem, labels: Sequence[GlobalLabel], start: Optional[GlobalState] = None) -> Replay:
    """Replay labels from start (default: the initial state)."""
    state = sys.initial if start is None else start
    for i, label in enumerate(labels):
        try:
            state = global_step(sys, state, label)
        except NotEnabledException as e:
            return Replay(False, state, i, e.reason)
    return Replay(True, state)


def replay_component(sys: GlobalSystem, component: Component, local_labels: Sequence) -> Union[NodeProgram, ChannelState]:
    """
    Step one component in isolation from its initial state.

    Raises:
        NotEnabledException
    """
    if isinstance(component, ChannelId):
        ci = sys.channel_index(component)
        st = sys.initial.channels[ci]
        for label in local_labels:
            st = channel_step(sys.specs[ci], st, label)
        return st
    node = sys.initial.nodes[sys.node_index(component)]
    for label in local_labels:
        node = node_step(node, label)
    return node


def component_state(sys: GlobalSystem, s: GlobalState, component: Component):
    if isinstance(component, ChannelId):
        return s.channels[sys.channel_index(component)]
    return s.nodes[sys.node_index(component)]


def check_decomposition(sys: GlobalSystem, labels: Sequence[GlobalLabel]) -> bool:
    """Every component's projection replays locally onto its part of the final state."""
    replay = is_permissible(sys, labels)
    if not replay.ok:
        return False
    for component in sys.components:
        try:
            local_final = replay_component(sys, component, project_labels(labels, component))
        except NotEnabledException:
            return False
        if local_final != component_state(sys, replay.state, component):
            return False
    return True


def stitch(
    sys: GlobalSystem,
    channel_order: Sequence[ChannelId],
    local: Dict[Component, Sequence],
) -> List[GlobalLabel]:
    """
    Rebuild global labels from per-component label sequences.

    channel_order says which channel acts at each step; node sub-labels are
    taken from the front of the node's queue and must agree with the channel's.

    Raises:
        NotEnabledException: the local sequences do not fit together.
    """
    queues = {component: deque(labels) for component, labels in local.items()}
    out: List[GlobalLabel] = []
    for c in channel_order:
        if not queues.get(c):
            raise NotEnabledException(c, f"no local label left on {c}")
        chan_label = queues[c].popleft()
        if isinstance(chan_label, ChanByzSend):
            out.append(ByzL(c, chan_label.byz_sender, chan_label.receiver, chan_label.value))
            continue
        node = chan_label.sender if isinstance(chan_label, ChanSend) else chan_label.receiver
        expected = (NodeSend(c, chan_label.value) if isinstance(chan_label, ChanSend)
                    else NodeReceive(c, chan_label.msgs))
        if not queues.get(node) or queues[node][0] != expected:
            raise NotEnabledException(chan_label, f"{node} is not ready for it")
        queues[node].popleft()
        out.append(SendL(node, c, chan_label.value) if isinstance(chan_label, ChanSend)
                   else ReceiveL(node, c, chan_label.msgs))
    leftovers = [str(component) for component, q in queues.items() if q]
    if leftovers:
        raise NotEnabledException(leftovers, "local labels left over")
    return out


def check_composition(sys: GlobalSystem, labels: Sequence[GlobalLabel]) -> bool:
    """
    Re-stitch a trace's projections, in the original channel order and in the
    aligned order, and replay both globally onto the original final state.
    """
    original = is_permissible(sys, labels)
    if not original.ok:
        return False
    local = {component: project_labels(labels, component) for component in sys.components}
    for order in ([l.channel for l in labels], [l.channel for l in align(sys.delta, labels)]):
        try:
            stitched = stitch(sys, order, local)
        except NotEnabledException:
            return False
        replay = is_permissible(sys, stitched)
        if not replay.ok or replay.state != original.state:
            return False
        if any(project_labels(stitched, component) != local[component] for component in sys.components):
            return False
    return True


# =============================================================================
# Label codec
# =============================================================================

def label_to_json(label: GlobalLabel) -> dict:
    if isinstance(label, SendL):
        return {"kind": label.kind.value, "node": str(label.node), "chan": str(label.channel),
                "v": value_to_json(label.value)}
    if isinstance(label, ByzL):
        return {"kind": label.kind.value, "chan": str(label.channel), "from": str(label.byz_sender),
                "to": str(label.receiver), "v": value_to_json(label.value)}
    return {"kind": label.kind.value, "node": str(label.node), "chan": str(label.channel),
            "msgs": [value_to_json(v) for v in label.msgs]}


def label_from_json(obj: dict, sys: GlobalSystem) -> GlobalLabel:
    """
    Raises:
        TraceFormatException: unknown kind or channel, or payload of the wrong type.
    """
    try:
        channel = ChannelId.parse(obj["chan"])
        msg_type = sys.spec(channel).msg_type
        kind = LabelKind(obj["kind"])
        if kind == LabelKind.SEND:
            return SendL(NodeId.parse(obj["node"]), channel, value_from_json(obj["v"], msg_type))
        if kind == LabelKind.BYZ_SEND:
            return ByzL(channel, NodeId.parse(obj["from"]), NodeId.parse(obj["to"]), value_from_json(obj["v"], msg_type))
        return ReceiveL(NodeId.parse(obj["node"]), channel, tuple(value_from_json(v, msg_type) for v in obj["msgs"]))
    except (KeyError, ValueError, TypeError, ChoreoException) as e:
        raise TraceFormatException("<label>", f"cannot decode label {obj!r}: {e}") from e


def state_to_json(sys: GlobalSystem, s: GlobalState) -> dict:
    return {
        "nodes": {str(node_id): type(node).__name__ for node_id, node in zip(sys.node_ids, s.nodes)},
        "channels": [st.to_json(spec) for spec, st in zip(sys.specs, s.channels)],
    }


# =============================================================================
# Big-step semantics and adequacy
# =============================================================================

def bigstep_run(p: Program, cfg: Config) -> OutputSet:
    """
    Outputs of a closed let-comm normal form program, one comm at a time:
    every receiver picks any list the channel rules deliver, folds it, and
    the results are substituted into the rest of the program.
    """
    if not is_normal(p):
        raise ConfigurationException("The big-step runner needs a program in let-comm normal form.")
    return frozenset(_bigstep(p, cfg))


def _bigstep(p: Program, cfg: Config) -> Set[DistRecord]:
    if isinstance(p, Ret):
        return set(denote_prog(cfg, {}, p))
    comm_node = p.bound
    delta, result = typecheck_prog({}, cfg.role_names, comm_node)
    spec = ChannelSpec.from_entry(delta[0], cfg)
    receiver = comm_node.receiver
    outputs: Set[DistRecord] = set()
    per_receiver = _channel_outcomes(cfg, comm_node, spec)
    for combo in _product(per_receiver):
        literal = VectorLit(tuple(combo), receiver, result[receiver])
        outputs |= _bigstep(substitute(p.body, p.name, {receiver: literal}), cfg)
    return outputs


def _channel_outcomes(cfg: Config, comm_node: Comm, spec: ChannelSpec) -> List[List[Value]]:
    """
    Per good receiver, the fold results over every list the channel rules let
    it receive once all good senders have sent and any Byzantine sends landed.
    """
    msgs = denote_expr(cfg, {}, spec.sender_role, comm_node.msg)
    defaults = denote_expr(cfg, {}, spec.receiver_role, comm_node.default)
    combines = denote_expr(cfg, {}, spec.receiver_role, comm_node.combine)
    sent = ChannelState.initial(spec)
    for sender, v in zip(spec.senders, msgs):
        sent = channel_step(spec, sent, ChanSend(sender, v))

    per_receiver: List[List[Value]] = []
    for r, combine, default in zip(spec.receivers, combines, defaults):
        outcomes = {
            fold(combine, default, received)
            for st in _byz_deliveries(spec, sent, r)
            for received in receive_options(spec, st, r)
        }
        per_receiver.append(sorted(outcomes, key=sort_key))
    return per_receiver


def _byz_deliveries(spec: ChannelSpec, st: ChannelState, r: NodeId) -> Iterator[ChannelState]:
    values = enumerate_values(spec.msg_type)
    for k in range(spec.byz_bound + 1):
        for chosen in itertools.combinations_with_replacement(values, k):
            delivered = st
            for sb, v in zip(spec.byz_senders, chosen):
                delivered = channel_step(spec, delivered, ChanByzSend(sb, r, v))
            yield delivered


def _product(per_receiver: List[List[Value]]) -> Iterator[Tuple[Value, ...]]:
    combos: List[Tuple[Value, ...]] = [()]
    for outcomes in per_receiver:
        combos = [combo + (v,) for combo in combos for v in outcomes]
    return iter(combos)


def check_adequacy(
    p: Program,
    cfg: Config,
    budget: Budget = Budget(),
    jobs: int = 1,
    after_receive: bool = False,
    dedup_states: bool = True,
    materialize_lists: bool = False,
) -> CheckReport:
    """
    Operational outputs must be contained in the denotation.

    Also reports equality and the sandwich operational <= big-step <= denotation.
    A budget overrun yields an inconclusive report built from the partial
    exploration.
    """
    sys = global_compile(p, cfg)
    den = denote_closed(cfg, p, materialize_lists)
    try:
        exploration = explore(sys, budget, jobs=jobs, dedup_states=dedup_states, after_receive=after_receive)
    except BudgetExceededException as e:
        exploration = e.partial
    op = exploration.outputs_for(sys.result_roles)
    big = bigstep_run(normalize(p), cfg)
    subset = op <= den

    counterexample = None
    if not subset:
        for nid in sorted(exploration.completed):
            record = exploration.completed[nid].restrict(sys.result_roles)
            if record not in den:
                counterexample = {
                    "output": record.to_json(),
                    "trace": [label_to_json(label) for label in exploration.trace_to(nid)],
                }
                break

    report = CheckReport.from_outcome(
        "adequacy",
        subset,
        exploration.exhaustive,
        details={
            "subset": subset,
            "equal": op == den,
            "operational_in_bigstep": op <= big,
            "bigstep_in_denotation": big <= den,
            "states": exploration.num_states,
            "stuck_states": len(exploration.stuck),
            "operational": output_set_to_json(op),
            "bigstep": output_set_to_json(big),
            "denotational": output_set_to_json(den),
        },
        counterexample=counterexample,
    )
    logger.info(f"Adequacy: subset={subset} equal={op == den} exhaustive={exploration.exhaustive}")
    return report
