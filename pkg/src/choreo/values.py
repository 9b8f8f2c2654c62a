"""
Choreo - Value Universe

A closed, finitely enumerable universe of values and the pure-function layer
folded over it. The denotational enumerator and the operational simulator both
resolve functions through the same registry, so the two semantics cannot drift
apart through duplicated definitions.

Canonical order (used everywhere output is printed or compared):
  - false before true
  - naturals ascending
  - None before Some
  - pairs lexicographic

JSON encoding of values:
  {"t": "unit"}
  {"t": "bool", "v": true}
  {"t": "nat", "v": 3}
  {"t": "opt", "v": null | <value>}
  {"t": "pair", "v": [<left>, <right>]}
"""

from __future__ import annotations

import functools
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple, Union

from choreo.exceptions.application_exception import ApplicationException, ValueOutOfRangeException
from choreo.exceptions.configuration_exception import ConfigurationException

logger = logging.getLogger(__name__)


# =============================================================================
# Types
# =============================================================================

class Type:
    """Anything an HLL expression can be typed as."""


@dataclass(frozen=True)
class ValueType(Type):
    """A first-order type with a finite, deterministically ordered universe."""


@dataclass(frozen=True)
class UnitType(ValueType):
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class BoolType(ValueType):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class NatType(ValueType):
    max: int

    def __post_init__(self):
        if self.max < 0:
            raise ConfigurationException(f"Bounded naturals need a non-negative max, got {self.max}.")

    def __str__(self) -> str:
        return f"nat{self.max}"


@dataclass(frozen=True)
class OptionType(ValueType):
    inner: ValueType

    def __str__(self) -> str:
        return f"opt({self.inner})"


@dataclass(frozen=True)
class PairType(ValueType):
    left: ValueType
    right: ValueType

    def __str__(self) -> str:
        return f"({self.left}*{self.right})"


@dataclass(frozen=True)
class FnType(Type):
    """Curried function type. Not a ValueType: functions are never messages."""
    param: Type
    result: Type

    def __str__(self) -> str:
        return f"({self.param} -> {self.result})"


UNIT_T = UnitType()
BOOL_T = BoolType()


def type_size(t: ValueType) -> int:
    """Number of inhabitants of t."""
    if isinstance(t, UnitType):
        return 1
    if isinstance(t, BoolType):
        return 2
    if isinstance(t, NatType):
        return t.max + 1
    if isinstance(t, OptionType):
        return 1 + type_size(t.inner)
    if isinstance(t, PairType):
        return type_size(t.left) * type_size(t.right)
    raise ConfigurationException(f"{t} has no finite universe.")


# =============================================================================
# Values
# =============================================================================

@dataclass(frozen=True)
class Value:
    """
    A tagged inhabitant of exactly one ValueType.

    payload is None (unit / None), a bool, an int, a Value (Some) or a pair of
    Values, depending on the type.
    """
    type: ValueType
    payload: Any = None

    @property
    def is_some(self) -> bool:
        return isinstance(self.type, OptionType) and self.payload is not None

    @property
    def is_none(self) -> bool:
        return isinstance(self.type, OptionType) and self.payload is None

    @property
    def inner(self) -> 'Value':
        if not self.is_some:
            raise ApplicationException("inner", f"{self!r} is not Some")
        return self.payload

    @property
    def fst(self) -> 'Value':
        return self._pair_part(0)

    @property
    def snd(self) -> 'Value':
        return self._pair_part(1)

    def _pair_part(self, index: int) -> 'Value':
        if not isinstance(self.type, PairType):
            raise ApplicationException("fst/snd", f"{self!r} is not a pair")
        return self.payload[index]

    def __repr__(self) -> str:
        if isinstance(self.type, UnitType):
            return "tt"
        if isinstance(self.type, BoolType):
            return "true" if self.payload else "false"
        if isinstance(self.type, NatType):
            return str(self.payload)
        if isinstance(self.type, OptionType):
            return "None" if self.payload is None else f"Some({self.payload!r})"
        return f"({self.payload[0]!r}, {self.payload[1]!r})"


def unit() -> Value:
    return Value(UNIT_T, None)


def boolean(b: bool) -> Value:
    return Value(BOOL_T, bool(b))


def nat(n: int, t: NatType) -> Value:
    if not 0 <= n <= t.max:
        raise ValueOutOfRangeException(n, t)
    return Value(t, n)


def none(inner: ValueType) -> Value:
    return Value(OptionType(inner), None)


def some(v: Value) -> Value:
    return Value(OptionType(v.type), v)


def pair(left: Value, right: Value) -> Value:
    return Value(PairType(left.type, right.type), (left, right))


TT = unit()
TOP = boolean(True)
BOT = boolean(False)


def inhabits(v: Value, t: ValueType) -> bool:
    return isinstance(v, Value) and v.type == t


def sort_key(v: Value) -> tuple:
    """Canonical ordering key. Only comparable between values of the same type."""
    t = v.type
    if isinstance(t, UnitType):
        return ()
    if isinstance(t, (BoolType, NatType)):
        return (int(v.payload),)
    if isinstance(t, OptionType):
        return (0,) if v.payload is None else (1, sort_key(v.payload))
    return (sort_key(v.payload[0]), sort_key(v.payload[1]))


def vector_key(vec: Sequence[Value]) -> tuple:
    return tuple(sort_key(v) for v in vec)


@functools.lru_cache(maxsize=None)
def _enumerate_cached(t: ValueType) -> Tuple[Value, ...]:
    if isinstance(t, UnitType):
        return (TT,)
    if isinstance(t, BoolType):
        return (BOT, TOP)
    if isinstance(t, NatType):
        return tuple(Value(t, n) for n in range(t.max + 1))
    if isinstance(t, OptionType):
        return (none(t.inner),) + tuple(some(v) for v in _enumerate_cached(t.inner))
    if isinstance(t, PairType):
        return tuple(
            pair(l, r)
            for l, r in itertools.product(_enumerate_cached(t.left), _enumerate_cached(t.right))
        )
    raise ConfigurationException(f"{t} has no finite universe.")


def enumerate_values(t: ValueType) -> List[Value]:
    """
    Every inhabitant of t exactly once, in canonical order.

    Args:
        t: A well-formed ValueType

    Returns:
        Ordered list of Values
    """
    return list(_enumerate_cached(t))


# =============================================================================
# Pure functions
# =============================================================================

@dataclass(frozen=True)
class PureFn:
    """
    A named, total, deterministic function over the value universe.

    commutative declares that folding the function (with every leading
    parameter bound) is independent of message order, so enumeration may use
    one representative per multiset.
    """
    name: str
    signature: Tuple[ValueType, ...]
    result: ValueType
    body: Callable[..., Value] = field(compare=False, repr=False)
    commutative: bool = False

    def __post_init__(self):
        if not self.signature:
            raise ConfigurationException(f"Pure function {self.name} needs at least one parameter.")

    @property
    def arity(self) -> int:
        return len(self.signature)

    @property
    def fn_type(self) -> FnType:
        t: Type = self.result
        for param in reversed(self.signature):
            t = FnType(param, t)
        return t

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Closure:
    """A PureFn with a prefix of its arguments supplied."""
    fn: PureFn
    bound: Tuple[Value, ...] = ()

    @property
    def remaining(self) -> int:
        return self.fn.arity - len(self.bound)

    @property
    def commutative(self) -> bool:
        return self.fn.commutative

    @property
    def fn_type(self) -> Type:
        t: Type = self.fn.result
        for param in reversed(self.fn.signature[len(self.bound):]):
            t = FnType(param, t)
        return t

    def call(self, arg: Value) -> 'Runtime':
        """Supply one more argument; invokes the body once saturated."""
        if self.remaining == 0:
            raise ApplicationException(self.fn.name, "all arguments already supplied")
        expected = self.fn.signature[len(self.bound)]
        if not inhabits(arg, expected):
            raise ApplicationException(
                self.fn.name,
                f"argument {len(self.bound) + 1} is {arg!r}, expected a value of type {expected}",
            )
        args = self.bound + (arg,)
        if len(args) < self.fn.arity:
            return Closure(self.fn, args)
        result = self.fn.body(*args)
        if not inhabits(result, self.fn.result):
            raise ValueOutOfRangeException(result, self.fn.result, f"Returned by {self.fn.name}.")
        return result

    def __repr__(self) -> str:
        if not self.bound:
            return self.fn.name
        return f"{self.fn.name}({', '.join(repr(v) for v in self.bound)})"


Runtime = Union[Value, Closure]
Callee = Union[PureFn, Closure]


def as_closure(f: Callee) -> Closure:
    return f if isinstance(f, Closure) else Closure(f)


def partial(f: Callee, args: Sequence[Value]) -> Closure:
    """Bind a strict prefix of f's remaining arguments."""
    closure = as_closure(f)
    if len(args) >= closure.remaining:
        raise ApplicationException(closure.fn.name, f"partial application needs fewer than {closure.remaining} arguments")
    for arg in args:
        closure = closure.call(arg)
    return closure


def apply(f: Callee, args: Sequence[Value]) -> Value:
    """
    Apply f to exactly its remaining arguments.

    Raises:
        ApplicationException: on arity or type mismatch.
    """
    closure = as_closure(f)
    if len(args) != closure.remaining:
        raise ApplicationException(
            closure.fn.name, f"expected {closure.remaining} argument(s), got {len(args)}"
        )
    result: Runtime = closure
    for arg in args:
        result = result.call(arg)
    return result


def fold(f: Callee, default: Value, msgs: Iterable[Value]) -> Value:
    """Left fold of a binary (acc, msg) -> acc function over msgs."""
    closure = as_closure(f)
    if closure.remaining != 2:
        raise ApplicationException(closure.fn.name, "folding needs a function of exactly two remaining arguments")
    acc = default
    for m in msgs:
        acc = closure.call(acc).call(m)
    return acc


def fold_is_order_independent(f: Callee, default: Value, msgs: Sequence[Value]) -> bool:
    """True iff every permutation of msgs folds to the same result."""
    results = {fold(f, default, p) for p in itertools.permutations(msgs)}
    return len(results) == 1


# =============================================================================
# Registry
# =============================================================================

class FunctionRegistry:
    """
    Name -> PureFn table shared by both semantics.

    Populated single-threaded while protocols are built. Registering a name
    twice returns the existing entry when the declarations agree.
    """

    def __init__(self):
        self._fns: Dict[str, PureFn] = {}

    def register(self, fn: PureFn) -> PureFn:
        existing = self._fns.get(fn.name)
        if existing is not None:
            if existing != fn:
                raise ConfigurationException(
                    f"Pure function {fn.name} is already registered with a different declaration."
                )
            return existing
        self._fns[fn.name] = fn
        logger.debug(f"Registered pure function {fn.name}: {fn.fn_type}")
        return fn

    def resolve(self, name: str) -> PureFn:
        try:
            return self._fns[name]
        except KeyError:
            raise ApplicationException(name, "no pure function registered under this name") from None

    def names(self) -> List[str]:
        return sorted(self._fns)

    def __contains__(self, name: str) -> bool:
        return name in self._fns

    def __len__(self) -> int:
        return len(self._fns)


REGISTRY = FunctionRegistry()


def pure_fn(
    name: str,
    signature: Sequence[ValueType],
    result: ValueType,
    commutative: bool = False,
    registry: FunctionRegistry = REGISTRY,
) -> Callable[[Callable[..., Value]], PureFn]:
    """
    Decorator turning a Python function into a registered PureFn.

    Example:
        @pure_fn("neg", (BOOL_T,), BOOL_T)
        def neg(b):
            return boolean(not b.payload)
    """
    def decorator(body: Callable[..., Value]) -> PureFn:
        return registry.register(PureFn(name, tuple(signature), result, body, commutative))
    return decorator


# =============================================================================
# JSON codec
# =============================================================================

def value_to_json(v: Value) -> dict:
    t = v.type
    if isinstance(t, UnitType):
        return {"t": "unit"}
    if isinstance(t, BoolType):
        return {"t": "bool", "v": bool(v.payload)}
    if isinstance(t, NatType):
        return {"t": "nat", "v": int(v.payload)}
    if isinstance(t, OptionType):
        return {"t": "opt", "v": None if v.payload is None else value_to_json(v.payload)}
    return {"t": "pair", "v": [value_to_json(v.payload[0]), value_to_json(v.payload[1])]}


def value_from_json(obj: Any, t: ValueType) -> Value:
    """
    Decode a value against its expected type.

    Raises:
        ValueOutOfRangeException: if obj does not encode an inhabitant of t.
    """
    tag = obj.get("t") if isinstance(obj, dict) else None
    if isinstance(t, UnitType) and tag == "unit":
        return TT
    if isinstance(t, BoolType) and tag == "bool" and isinstance(obj.get("v"), bool):
        return boolean(obj["v"])
    if isinstance(t, NatType) and tag == "nat" and type(obj.get("v")) is int:
        return nat(obj["v"], t)
    if isinstance(t, OptionType) and tag == "opt":
        inner = obj.get("v")
        return none(t.inner) if inner is None else some(value_from_json(inner, t.inner))
    if isinstance(t, PairType) and tag == "pair" and isinstance(obj.get("v"), list) and len(obj["v"]) == 2:
        return pair(value_from_json(obj["v"][0], t.left), value_from_json(obj["v"][1], t.right))
    raise ValueOutOfRangeException(obj, t, "Cannot decode.")


def type_to_json(t: ValueType) -> dict:
    if isinstance(t, UnitType):
        return {"t": "unit"}
    if isinstance(t, BoolType):
        return {"t": "bool"}
    if isinstance(t, NatType):
        return {"t": "nat", "max": t.max}
    if isinstance(t, OptionType):
        return {"t": "opt", "inner": type_to_json(t.inner)}
    if isinstance(t, PairType):
        return {"t": "pair", "left": type_to_json(t.left), "right": type_to_json(t.right)}
    raise ConfigurationException(f"{t} is not a value type.")


def type_from_json(obj: Any) -> ValueType:
    tag = obj.get("t") if isinstance(obj, dict) else None
    if tag == "unit":
        return UNIT_T
    if tag == "bool":
        return BOOL_T
    if tag == "nat":
        return NatType(int(obj["max"]))
    if tag == "opt":
        return OptionType(type_from_json(obj["inner"]))
    if tag == "pair":
        return PairType(type_from_json(obj["left"]), type_from_json(obj["right"]))
    raise ConfigurationException(f"Cannot decode value type from {obj!r}.")


def value_from_plain(obj: Any, t: ValueType) -> Value:
    """
    Decode the compact form used on the command line and in config files.

    true/false for bools, integers for naturals, null for None, any other
    value for Some, and two-element lists for pairs.
    """
    if isinstance(t, UnitType) and obj is None:
        return TT
    if isinstance(t, BoolType) and isinstance(obj, bool):
        return boolean(obj)
    if isinstance(t, NatType) and type(obj) is int:
        return nat(obj, t)
    if isinstance(t, OptionType):
        return none(t.inner) if obj is None else some(value_from_plain(obj, t.inner))
    if isinstance(t, PairType) and isinstance(obj, (list, tuple)) and len(obj) == 2:
        return pair(value_from_plain(obj[0], t.left), value_from_plain(obj[1], t.right))
    raise ValueOutOfRangeException(obj, t, "Cannot decode.")


def value_to_plain(v: Value) -> Any:
    t = v.type
    if isinstance(t, UnitType):
        return None
    if isinstance(t, (BoolType, NatType)):
        return v.payload
    if isinstance(t, OptionType):
        return None if v.payload is None else value_to_plain(v.payload)
    return [value_to_plain(v.payload[0]), value_to_plain(v.payload[1])]
