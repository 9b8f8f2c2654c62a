"""
Choreo - Pure Function Library

Registry-backed factories for every function the built-in protocols fold or
apply. A factory's parameters (n, f, value types) are part of the registered
name, e.g. "calc_dec[n=4,f=1]", so two instantiations never collide and the
same instantiation always resolves to the same entry.

Every function here is total on its declared signature. Arithmetic that would
leave a bounded natural type raises ValueOutOfRangeException instead of
wrapping.
"""

from choreo.values import (
    BOOL_T,
    NatType,
    OptionType,
    PairType,
    PureFn,
    ValueType,
    boolean,
    enumerate_values,
    nat,
    none,
    pair,
    pure_fn,
    some,
)


# =============================================================================
# Counting
# =============================================================================

def fcnteq(value_type: ValueType, count_type: NatType) -> PureFn:
    """fcnteq p cnt v = if p == v then cnt + 1 else cnt."""
    @pure_fn(f"fcnteq[{value_type},{count_type}]", (value_type, count_type, value_type), count_type,
             commutative=True)
    def body(p, cnt, v):
        return nat(cnt.payload + 1, count_type) if p == v else cnt
    return body


def fcnteq_round(round_type: NatType, count_type: NatType, value_type: ValueType) -> PureFn:
    """Counts replica states whose round equals r: fcnteq r c (_, r') = if r == r' then c + 1 else c."""
    state_type = PairType(OptionType(value_type), round_type)

    @pure_fn(f"fcnteq_round[{round_type},{count_type},{value_type}]", (round_type, count_type, state_type),
             count_type, commutative=True)
    def body(r, cnt, state):
        return nat(cnt.payload + 1, count_type) if state.snd == r else cnt
    return body


def fcntb(count_type: NatType) -> PureFn:
    """Counts (true, false) votes."""
    counts = PairType(count_type, count_type)

    @pure_fn(f"fcntb[{count_type}]", (counts, BOOL_T), counts, commutative=True)
    def body(cnts, v):
        cnt_top, cnt_bot = cnts.fst.payload, cnts.snd.payload
        if v.payload:
            return pair(nat(cnt_top + 1, count_type), cnts.snd)
        return pair(cnts.fst, nat(cnt_bot + 1, count_type))
    return body


# =============================================================================
# Decisions
# =============================================================================

def calc_dec(n: int, f: int, count_type: NatType) -> PureFn:
    """calc_dec cnt p = if cnt >= n - 2f then Some p else None."""
    @pure_fn(f"calc_dec[n={n},f={f},{count_type}]", (count_type, BOOL_T), OptionType(BOOL_T))
    def body(cnt, p):
        return some(p) if cnt.payload >= n - 2 * f else none(BOOL_T)
    return body


def bosco_mkdec(n: int, f: int, count_type: NatType, asymmetric: bool = False) -> PureFn:
    """
    Bosco decision step.

    The majority value (true on ties) becomes newv. The node decides when
    2 * cnt > n + 3f. With asymmetric set, a true majority decides already at
    2 * cnt >= n + 3f while a false majority keeps the strict bound.

    Args:
        n: Total number of nodes
        f: Fault bound
        count_type: Bounded naturals the counts live in
        asymmetric: Use the relaxed threshold for true

    Returns:
        (cnt_true, cnt_false) -> (option bool, bool)
    """
    suffix = ",asym" if asymmetric else ""

    @pure_fn(f"bosco_mkdec[n={n},f={f},{count_type}{suffix}]", (PairType(count_type, count_type),),
             PairType(OptionType(BOOL_T), BOOL_T))
    def body(cnts):
        cnt_top, cnt_bot = cnts.fst.payload, cnts.snd.payload
        newv, cnt = (True, cnt_top) if cnt_top >= cnt_bot else (False, cnt_bot)
        threshold = n + 3 * f
        decides = cnt * 2 >= threshold if (asymmetric and newv) else cnt * 2 > threshold
        dec = some(boolean(newv)) if decides else none(BOOL_T)
        return pair(dec, boolean(newv))
    return body


def seqpaxos_mkdec(f: int, count_type: NatType, value_type: ValueType) -> PureFn:
    """mkdec c p = if c > f then Some p else None."""
    @pure_fn(f"seqpaxos_mkdec[f={f},{count_type},{value_type}]", (count_type, value_type),
             OptionType(value_type))
    def body(cnt, p):
        return some(p) if cnt.payload > f else none(value_type)
    return body


# =============================================================================
# SeqPaxos state handling
# =============================================================================

def fmaxr(value_type: ValueType, round_type: NatType) -> PureFn:
    """
    Keep the state with the highest round; ties keep the accumulator.

    Not commutative: two states with equal rounds and different values fold
    differently depending on which comes first.
    """
    state_type = PairType(OptionType(value_type), round_type)

    @pure_fn(f"fmaxr[{value_type},{round_type}]", (state_type, state_type), state_type)
    def body(acc, state):
        return state if acc.snd.payload < state.snd.payload else acc
    return body


def pickp(value_type: ValueType, round_type: NatType) -> PureFn:
    """pickp (ov, _) d = v if ov is Some v, otherwise d."""
    state_type = PairType(OptionType(value_type), round_type)

    @pure_fn(f"pickp[{value_type},{round_type}]", (state_type, value_type), value_type)
    def body(state, d):
        return state.fst.inner if state.fst.is_some else d
    return body


def update(value_type: ValueType, round_type: NatType) -> PureFn:
    """update _ (v, r) = (Some v, r)."""
    state_type = PairType(OptionType(value_type), round_type)

    @pure_fn(f"update[{value_type},{round_type}]", (state_type, PairType(value_type, round_type)), state_type)
    def body(_old, proposal):
        return pair(some(proposal.fst), proposal.snd)
    return body


def default_table(value_type: ValueType, round_type: NatType) -> PureFn:
    """default r = the (r mod |V|)-th value of V in canonical order."""
    universe = enumerate_values(value_type)

    @pure_fn(f"default[{value_type},{round_type}]", (round_type,), value_type)
    def body(r):
        return universe[r.payload % len(universe)]
    return body


def default_value(value_type: ValueType, r: int):
    """The value default(r) without going through a round-typed argument."""
    universe = enumerate_values(value_type)
    return universe[r % len(universe)]


# =============================================================================
# Generic helpers
# =============================================================================

def pair_fn(left: ValueType, right: ValueType) -> PureFn:
    @pure_fn(f"pair[{left},{right}]", (left, right), PairType(left, right))
    def body(l, r):
        return pair(l, r)
    return body


def fst_fn(pair_type: PairType) -> PureFn:
    @pure_fn(f"fst[{pair_type}]", (pair_type,), pair_type.left)
    def body(p):
        return p.fst
    return body


def snd_fn(pair_type: PairType) -> PureFn:
    @pure_fn(f"snd[{pair_type}]", (pair_type,), pair_type.right)
    def body(p):
        return p.snd
    return body


def add(nat_type: NatType) -> PureFn:
    @pure_fn(f"add[{nat_type}]", (nat_type, nat_type), nat_type)
    def body(a, b):
        return nat(a.payload + b.payload, nat_type)
    return body
