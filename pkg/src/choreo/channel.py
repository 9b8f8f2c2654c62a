"""
Choreo - Single-Use Channel Semantics

A channel carries exactly one broadcast/collect exchange between a sender
role and a receiver role. Its state:

    F_s   good senders that have sent
    F_r   good receivers that have received
    F_b   per receiver, the Byzantine senders that have sent to it
    M     per receiver, every message delivered into its mailbox so far
    M_s   messages sent by good senders, in send order
    M_r   per receiver, the list it actually received

Per-receiver fields are tuples aligned with ChannelSpec.receivers; a receiver
has received iff its M_r entry is not None.

Labels:
    send(s, v)          good sender s broadcasts v
    byz_send(sb, r, v)  Byzantine sender sb sends v to r only
    receive(r, msgs)    r takes msgs, a sub-multiset of M(r) of size >= lo
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

from choreo.choreo_enums import LabelKind
from choreo.denote import Config, NodeId, canonical_multiset
from choreo.exceptions.semantics_exception import ChannelNotFinishedException, NotEnabledException
from choreo.hll import ChannelEntry, ChannelId, Role
from choreo.values import Value, ValueType, enumerate_values, inhabits, value_to_json, vector_key

logger = logging.getLogger(__name__)

Vector = Tuple[Value, ...]


# =============================================================================
# Static parameters
# =============================================================================

@dataclass(frozen=True)
class ChannelSpec:
    channel: ChannelId
    sender_role: Role
    receiver_role: Role
    msg_type: ValueType
    senders: Tuple[NodeId, ...]
    byz_senders: Tuple[NodeId, ...]
    receivers: Tuple[NodeId, ...]
    lo: int

    @property
    def byz_bound(self) -> int:
        return len(self.byz_senders)

    @property
    def self_role(self) -> bool:
        return self.sender_role == self.receiver_role

    def receiver_index(self, r: NodeId) -> int:
        try:
            return self.receivers.index(r)
        except ValueError:
            raise NotEnabledException(r, f"{r} is not a receiver on {self.channel}") from None

    @classmethod
    def from_entry(cls, entry: ChannelEntry, cfg: Config) -> 'ChannelSpec':
        sender_cfg = cfg[entry.sender]
        if sender_cfg.lo == 0:
            logger.warning(f"Channel {entry.channel}: receivers may take the empty list (n - f = 0 for {entry.sender})")
        return cls(
            channel=entry.channel,
            sender_role=entry.sender,
            receiver_role=entry.receiver,
            msg_type=entry.msg_type,
            senders=sender_cfg.good,
            byz_senders=sender_cfg.byz,
            receivers=cfg[entry.receiver].good,
            lo=sender_cfg.lo,
        )


# =============================================================================
# State and labels
# =============================================================================

@dataclass(frozen=True)
class ChannelState:
    sent: FrozenSet[NodeId]
    byz: Tuple[FrozenSet[NodeId], ...]
    mailbox: Tuple[Vector, ...]
    sent_msgs: Vector
    delivered: Tuple[Optional[Vector], ...]

    @classmethod
    def initial(cls, spec: ChannelSpec) -> 'ChannelState':
        width = len(spec.receivers)
        return cls(frozenset(), (frozenset(),) * width, ((),) * width, (), (None,) * width)

    def received(self, spec: ChannelSpec) -> FrozenSet[NodeId]:
        return frozenset(r for r, got in zip(spec.receivers, self.delivered) if got is not None)

    def to_json(self, spec: ChannelSpec) -> dict:
        return {
            "channel": str(spec.channel),
            "sent": sorted(str(s) for s in self.sent),
            "received": sorted(str(r) for r in self.received(spec)),
            "byz": {str(r): sorted(str(s) for s in fb) for r, fb in zip(spec.receivers, self.byz)},
            "mailbox": {str(r): [value_to_json(v) for v in m] for r, m in zip(spec.receivers, self.mailbox)},
            "sent_msgs": [value_to_json(v) for v in self.sent_msgs],
        }


@dataclass(frozen=True)
class ChanSend:
    sender: NodeId
    value: Value

    kind = LabelKind.SEND


@dataclass(frozen=True)
class ChanByzSend:
    byz_sender: NodeId
    receiver: NodeId
    value: Value

    kind = LabelKind.BYZ_SEND


@dataclass(frozen=True)
class ChanReceive:
    receiver: NodeId
    msgs: Vector

    kind = LabelKind.RECEIVE


ChannelLabel = Union[ChanSend, ChanByzSend, ChanReceive]


# =============================================================================
# Asynchrony
# =============================================================================

def netwk_lll(msgs: Sequence[Value], lo: int) -> Set[Vector]:
    """Every reordering of msgs, truncated to any length >= lo. No Byzantine additions."""
    out: Set[Vector] = set()
    for permuted in itertools.permutations(msgs):
        for k in range(max(lo, 0), len(permuted) + 1):
            out.add(permuted[:k])
    return out


def is_sub_multiset(small: Sequence[Value], big: Sequence[Value]) -> bool:
    return not (Counter(small) - Counter(big))


# =============================================================================
# Transitions
# =============================================================================

def channel_step(spec: ChannelSpec, st: ChannelState, label: ChannelLabel) -> ChannelState:
    """
    Apply one channel label.

    Raises:
        NotEnabledException: a premise of the label's rule fails.
    """
    if isinstance(label, ChanSend):
        if label.sender not in spec.senders:
            raise NotEnabledException(label, f"{label.sender} is not a good sender on {spec.channel}")
        if label.sender in st.sent:
            raise NotEnabledException(label, f"{label.sender} already sent on {spec.channel}")
        if not inhabits(label.value, spec.msg_type):
            raise NotEnabledException(label, f"payload is not of type {spec.msg_type}")
        return replace(
            st,
            sent=st.sent | {label.sender},
            mailbox=tuple(m + (label.value,) for m in st.mailbox),
            sent_msgs=st.sent_msgs + (label.value,),
        )

    if isinstance(label, ChanByzSend):
        if label.byz_sender not in spec.byz_senders:
            raise NotEnabledException(label, f"{label.byz_sender} is not a Byzantine sender on {spec.channel}")
        i = spec.receiver_index(label.receiver)
        if label.byz_sender in st.byz[i]:
            raise NotEnabledException(label, f"{label.byz_sender} already sent to {label.receiver}")
        if not inhabits(label.value, spec.msg_type):
            raise NotEnabledException(label, f"payload is not of type {spec.msg_type}")
        return replace(
            st,
            byz=st.byz[:i] + (st.byz[i] | {label.byz_sender},) + st.byz[i + 1:],
            mailbox=st.mailbox[:i] + (st.mailbox[i] + (label.value,),) + st.mailbox[i + 1:],
        )

    if isinstance(label, ChanReceive):
        i = spec.receiver_index(label.receiver)
        reason = _receive_blocked(spec, st, label.receiver, i)
        if reason:
            raise NotEnabledException(label, reason)
        mailbox = st.mailbox[i]
        if not spec.lo <= len(label.msgs) <= len(mailbox):
            raise NotEnabledException(label, f"needs between {spec.lo} and {len(mailbox)} messages")
        if not is_sub_multiset(label.msgs, mailbox):
            raise NotEnabledException(label, "messages were not delivered to this receiver")
        return replace(st, delivered=st.delivered[:i] + (tuple(label.msgs),) + st.delivered[i + 1:])

    raise TypeError(f"Not a channel label: {label!r}")


def _receive_blocked(spec: ChannelSpec, st: ChannelState, r: NodeId, i: int) -> Optional[str]:
    if st.delivered[i] is not None:
        return f"{r} already received on {spec.channel}"
    if spec.self_role and r not in st.sent:
        return f"{r} must send on {spec.channel} before receiving"
    return None


def receive_options(spec: ChannelSpec, st: ChannelState, r: NodeId, commutative: bool = False) -> List[Vector]:
    """
    Message lists r may receive now, in canonical order.

    With commutative set, one sorted representative per multiset.
    """
    i = spec.receiver_index(r)
    if _receive_blocked(spec, st, r, i) or len(st.mailbox[i]) < spec.lo:
        return []
    mailbox = st.mailbox[i]
    if commutative:
        options = {
            canonical_multiset(chosen)
            for k in range(max(spec.lo, 0), len(mailbox) + 1)
            for chosen in itertools.combinations(mailbox, k)
        }
    else:
        options = netwk_lll(mailbox, spec.lo)
    return sorted(options, key=lambda v: (len(v), vector_key(v)))


def byz_labels(spec: ChannelSpec, st: ChannelState, after_receive: bool = False) -> List[ChanByzSend]:
    """
    Enabled Byzantine sends. Receivers that already received are skipped
    unless after_receive is set; such sends cannot change any outcome.
    """
    labels = []
    for i, r in enumerate(spec.receivers):
        if st.delivered[i] is not None and not after_receive:
            continue
        for sb in spec.byz_senders:
            if sb in st.byz[i]:
                continue
            labels.extend(ChanByzSend(sb, r, v) for v in enumerate_values(spec.msg_type))
    return labels


# =============================================================================
# Finished channels
# =============================================================================

def is_finished(spec: ChannelSpec, st: ChannelState) -> bool:
    return st.sent == frozenset(spec.senders) and all(got is not None for got in st.delivered)


def extract_bigstep(spec: ChannelSpec, st: ChannelState) -> Dict[NodeId, Vector]:
    """
    What each receiver received on a finished channel.

    Raises:
        ChannelNotFinishedException
    """
    if not is_finished(spec, st):
        raise ChannelNotFinishedException(spec.channel)
    return dict(zip(spec.receivers, st.delivered))


def mailbox_within_bound(spec: ChannelSpec, st: ChannelState) -> bool:
    """
    Every mailbox holds exactly the good messages plus at most b Byzantine
    ones, and no receiver heard from more than b Byzantine senders.
    """
    for fb, mailbox in zip(st.byz, st.mailbox):
        if len(fb) > spec.byz_bound:
            return False
        if len(mailbox) != len(st.sent) + len(fb):
            return False
        if not is_sub_multiset(st.sent_msgs, mailbox):
            return False
    return True
