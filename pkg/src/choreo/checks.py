"""
Choreo - Property Checks

Executable versions of the protocol theorems, checked by exhaustive
enumeration over a finite configuration:

    check_one_step            Bosco decides in one step when n > 7f
    check_agreement_bosco     decisions imply UC_B, UC_B is preserved
    check_agreement_seqpaxos  decisions imply UC_D, UC_D is preserved, plus
                              the per-iteration input invariants
    check_counting_lemma      #_v(l) - f <= #_v(l') <= #_v(l) + b
    check_uc_prime            closed form of UC' against its definition
    check_simple_vote_safety  all-same input makes the leader decide
    check_instance_adequacy   operational outputs within the denotation
    check_trace_lemmas        alignment, decomposition and composition over
                              sampled traces

Multi-iteration runs compose the one-iteration denotation: the outputs of
k + 1 iterations from x are the outputs of k iterations from every threaded
output of one iteration from x.
"""

import itertools
import logging
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from choreo.choreo_enums import CheckName, ProtocolName
from choreo.constants import DEFAULT_SAMPLED_TRACES
from choreo.denote import Config, count_occurrences, denote_closed, netwk_multisets, sorted_outputs
from choreo.functions import default_value
from choreo.global_lts import (
    Budget,
    align,
    check_adequacy,
    check_composition,
    check_decomposition,
    extract,
    global_compile,
    is_completed,
    is_permissible,
    label_to_json,
    project_labels,
    sample_traces,
)
from choreo.hll import close_body
from choreo.lll import respects_order
from choreo.protocols import (
    LEADER,
    ONE_STEP_FACTOR,
    REPLICA,
    ProtocolInstance,
    bosco,
    build_instance,
    resilience_met,
    seqpaxos,
    seqpaxos_init,
    seqpaxos_round_type,
    uc_bosco,
    uc_prime_bosco,
    uc_prime_bosco_closed,
    uc_seqpaxos,
)
from choreo.report import CheckReport
from choreo.values import BOOL_T, BOT, TOP, NatType, Value, enumerate_values, none, pair, some, value_to_plain

logger = logging.getLogger(__name__)

Vector = Tuple[Value, ...]
BOOLS = (TOP, BOT)


def bool_vectors(length: int) -> List[Vector]:
    return [tuple(v) for v in itertools.product((BOT, TOP), repeat=length)]


def _plain(values: Sequence[Value]) -> list:
    return [value_to_plain(v) for v in values]


# =============================================================================
# Bosco
# =============================================================================

def check_one_step(n: int, f: int, b: int) -> CheckReport:
    """Every good node outputs (Some B, B) after one iteration from all-B input."""
    precondition = resilience_met(ProtocolName.BOSCO, n, f, ONE_STEP_FACTOR)
    if not precondition:
        logger.warning(f"one-step: n > 7f does not hold for n={n}, f={f}; a violation is expected")

    base = build_instance(ProtocolName.BOSCO, n=n, f=f, b=b)
    g = base.config[REPLICA].g
    details: Dict[str, dict] = {}
    counterexample = None
    for B in BOOLS:
        inst = base.with_inputs({REPLICA: (B,) * g})
        outputs = denote_closed(inst.config, inst.closed())
        expected = pair(some(B), B)
        bad = [r for r in sorted_outputs(outputs) if any(v != expected for v in r[REPLICA])]
        details[str(value_to_plain(B)).lower()] = {"outputs": len(outputs), "non_deciding": len(bad)}
        if bad and counterexample is None:
            counterexample = {"input": _plain((B,) * g), "output": bad[0].to_json()}

    report = CheckReport.from_outcome(
        CheckName.ONE_STEP.value, counterexample is None,
        precondition_met=precondition, details=details, counterexample=counterexample,
    )
    logger.info(f"one-step n={n} f={f} b={b}: {report.verdict.value}")
    return report


class BoscoSteps:
    """Memoized Step^k for one Bosco configuration: sets of (decisions, next inputs)."""

    def __init__(self, n: int, f: int, b: int, asymmetric: bool = False):
        self.config = Config.build(R=(n, f, b))
        self.body = bosco(n, f, asymmetric)
        self._memo: Dict[Tuple[int, Vector], FrozenSet[Tuple[Vector, Vector]]] = {}

    def step(self, k: int, xs: Vector) -> FrozenSet[Tuple[Vector, Vector]]:
        key = (k, xs)
        if key in self._memo:
            return self._memo[key]
        if k == 0:
            outputs = denote_closed(self.config, close_body(self.body, {REPLICA: xs}))
            result = frozenset(
                (tuple(v.fst for v in record[REPLICA]), tuple(v.snd for v in record[REPLICA]))
                for record in outputs
            )
        else:
            result = frozenset().union(*(self.step(k - 1, zs) for _, zs in self.step(0, xs)))
        self._memo[key] = result
        return result


def _decides(ys: Vector, B: Value) -> bool:
    return some(B) in ys


def _complies(ys: Vector, B: Value) -> bool:
    return all(y == some(B) or y.is_none for y in ys)


def check_agreement_bosco(n: int, f: int, b: int, k: int, asymmetric: bool = False) -> CheckReport:
    """
    Over every good input vector:

      (1) a decision on B at step 0 implies UC(x)
      (2) UC(x) implies, for every k' <= k and every (y, z) in Step^k'(x),
          Comply_B(y) and UC(z)

    and no input lets one run decide true while another decides false.
    UC is UC_B, or UC' when the asymmetric threshold is in use.
    """
    precondition = resilience_met(ProtocolName.BOSCO, n, f)
    steps = BoscoSteps(n, f, b, asymmetric)
    uc = uc_prime_bosco(steps.config, n, f, asymmetric) if asymmetric else uc_bosco(n, f)
    g = steps.config[REPLICA].g

    violations: List[dict] = []
    univalent_inputs = 0
    deciding_inputs = 0
    for xs in bool_vectors(g):
        decided: Set[Value] = set()
        for ys, _ in steps.step(0, xs):
            for B in BOOLS:
                if _decides(ys, B):
                    decided.add(B)
                    if not uc(xs, B):
                        violations.append({"obligation": 1, "input": _plain(xs), "B": value_to_plain(B),
                                           "decisions": _plain(ys)})
        if decided:
            deciding_inputs += 1
        if len(decided) > 1:
            violations.append({"obligation": "agreement", "input": _plain(xs)})

        for B in BOOLS:
            if not uc(xs, B):
                continue
            univalent_inputs += 1
            for j in range(k + 1):
                for ys, zs in sorted(steps.step(j, xs), key=repr):
                    if not _complies(ys, B) or not uc(zs, B):
                        violations.append({"obligation": 2, "input": _plain(xs), "B": value_to_plain(B), "k": j,
                                           "decisions": _plain(ys), "next": _plain(zs)})

    report = CheckReport.from_outcome(
        CheckName.BOSCO_AGREEMENT.value, not violations,
        precondition_met=precondition,
        details={"inputs": 2 ** g, "univalent_inputs": univalent_inputs, "deciding_inputs": deciding_inputs,
                 "iterations": k, "predicate": uc.name, "violations": len(violations)},
        counterexample=violations[0] if violations else None,
    )
    logger.info(f"bosco-agreement n={n} f={f} b={b} k={k}: {report.verdict.value}")
    return report


def check_uc_prime(n: int, f: int, b: int, asymmetric: bool = False) -> CheckReport:
    """
    The closed form of UC' matches its definition on every vector, and UC_B
    implies UC'_B (every network list yields newv = B).
    """
    config = Config.build(R=(n, f, b))
    definitional = uc_prime_bosco(config, n, f, asymmetric)
    closed = uc_prime_bosco_closed(n, f)
    uc = uc_bosco(n, f)
    mismatches, univalence_failures = [], []
    for xs in bool_vectors(config[REPLICA].g):
        for B in BOOLS:
            holds = definitional(xs, B)
            if holds != closed(xs, B):
                mismatches.append({"input": _plain(xs), "B": value_to_plain(B), "definition": holds})
            if uc(xs, B) and not holds:
                univalence_failures.append({"input": _plain(xs), "B": value_to_plain(B)})
    return CheckReport.from_outcome(
        CheckName.UC_PRIME.value, not mismatches and not univalence_failures,
        details={"mismatches": len(mismatches), "univalence_failures": len(univalence_failures)},
        counterexample=(mismatches + univalence_failures)[0] if mismatches or univalence_failures else None,
    )


# =============================================================================
# Counting lemma
# =============================================================================

def check_counting_lemma(n: int, f: int, b: int) -> CheckReport:
    """
    For every good vector l and every l' the network can deliver:
    #_v(l) - f <= #_v(l') <= #_v(l) + b, with the upper bound reached when b > 0.
    """
    config = Config.build(R=(n, f, b))
    g = config[REPLICA].g
    violations = []
    checked = 0
    for l in bool_vectors(g):
        delivered = netwk_multisets(config, REPLICA, l, BOOL_T)
        for v in BOOLS:
            base = count_occurrences(v, l)
            counts = {count_occurrences(v, lp) for lp in delivered}
            checked += len(delivered)
            if min(counts) < base - f or max(counts) > base + b:
                violations.append({"input": _plain(l), "v": value_to_plain(v),
                                   "bounds": [base - f, base + b], "observed": [min(counts), max(counts)]})
            elif b > 0 and base + b not in counts:
                violations.append({"input": _plain(l), "v": value_to_plain(v), "missing_witness": base + b})
    return CheckReport.from_outcome(
        CheckName.COUNTING_LEMMA.value, not violations,
        details={"vectors": 2 ** g, "lists_checked": checked, "violations": len(violations)},
        counterexample=violations[0] if violations else None,
    )


# =============================================================================
# SeqPaxos
# =============================================================================

SeqResult = Tuple[Value, Value, Vector]   # decision, leader round out, replica states
SeqInput = Tuple[Value, Vector]           # leader round in, replica states


class SeqPaxosSteps:
    """Memoized iterations of one SeqPaxos configuration."""

    def __init__(self, n: int, f: int, value_size: int, iterations: int):
        inst = build_instance(ProtocolName.SEQPAXOS, n=n, f=f, value_size=value_size, iterations=iterations)
        self.config = inst.config
        self.value_type = inst.value_type
        self.round_type: NatType = seqpaxos_round_type(n, iterations)
        self.body = seqpaxos(n, f, self.value_type, iterations)
        init = seqpaxos_init(n, self.value_type, iterations)
        self.init: SeqInput = (init[LEADER][0], init[REPLICA])
        self._memo: Dict[Tuple[int, SeqInput], FrozenSet[SeqResult]] = {}

    def run(self, k: int, start: SeqInput) -> FrozenSet[SeqResult]:
        """Results of k + 1 iterations from start."""
        key = (k, start)
        if key in self._memo:
            return self._memo[key]
        if k == 0:
            r, xs = start
            outputs = denote_closed(self.config, close_body(self.body, {LEADER: (r,), REPLICA: xs}))
            result = frozenset((rec[LEADER][0].fst, rec[LEADER][0].snd, rec[REPLICA]) for rec in outputs)
        else:
            result = frozenset().union(*(self.run(k - 1, (r, xs)) for _, r, xs in self.run(0, start)))
        self._memo[key] = result
        return result


def seqpaxos_lemma_violations(i: int, result: SeqResult, value_type) -> List[str]:
    """Input invariants after iteration i; returns the names of failed bullets."""
    _, r, xs = result
    failed = []
    if r.payload != i + 2:
        failed.append("round")
    if any(x.snd.payload >= i + 2 for x in xs):
        failed.append("replica_round_bound")
    if any(x.snd.payload > 0 and not x.fst.is_some for x in xs):
        failed.append("positive_round_has_value")
    if any(a.snd == b.snd and a != b for a, b in itertools.combinations(xs, 2)):
        failed.append("equal_rounds_equal_states")
    # Values are proposals: a default of a round no later than the state's round
    for x in xs:
        if x.fst.is_some and x.fst.inner not in {default_value(value_type, j) for j in range(1, x.snd.payload + 1)}:
            failed.append("default_origin")
            break
    return failed


def check_agreement_seqpaxos(n: int, f: int, value_size: int, k: int) -> CheckReport:
    """
    From init, for every iteration i <= k and every reachable result:

      - the input invariants hold
      - (1) deciding Some D implies UC_D of the replica states
      - (2) UC_D, or a decision on D, confines every later decision within
            k iterations to {Some D, None}; UC_D also carries over
    """
    precondition = resilience_met(ProtocolName.SEQPAXOS, n, f)
    steps = SeqPaxosSteps(n, f, value_size, k)
    uc = uc_seqpaxos(steps.config, steps.value_type, steps.round_type)
    domain = enumerate_values(steps.value_type)

    violations: List[dict] = []
    frontier: Set[SeqInput] = {steps.init}
    reached = 0
    for i in range(k + 1):
        results = frozenset().union(*(steps.run(0, start) for start in frontier))
        reached += len(results)
        for result in sorted(results, key=repr):
            d, r, xs = result
            failed = seqpaxos_lemma_violations(i, result, steps.value_type)
            if failed:
                violations.append({"iteration": i, "lemma": failed, "round": r.payload, "replicas": _plain(xs)})
            univalent = {D for D in domain if uc(xs, D)}
            if d.is_some and d.inner not in univalent:
                violations.append({"iteration": i, "obligation": 1, "decision": value_to_plain(d),
                                   "replicas": _plain(xs)})
            targets = univalent | ({d.inner} if d.is_some else set())
            for D in sorted(targets, key=lambda v: v.payload):
                for m in range(k - i):
                    for d_later, _, xs_later in steps.run(m, (r, xs)):
                        if d_later not in (some(D), none(steps.value_type)):
                            violations.append({"iteration": i, "later": i + m + 1, "obligation": 2,
                                               "target": value_to_plain(D), "decision": value_to_plain(d_later)})
                        elif D in univalent and not uc(xs_later, D):
                            violations.append({"iteration": i, "later": i + m + 1, "obligation": 2,
                                               "target": value_to_plain(D), "replicas": _plain(xs_later)})
        frontier = {(r, xs) for _, r, xs in results}

    report = CheckReport.from_outcome(
        CheckName.SEQPAXOS_AGREEMENT.value, not violations,
        precondition_met=precondition,
        details={"iterations": k, "results": reached, "violations": len(violations)},
        counterexample=violations[0] if violations else None,
    )
    logger.info(f"seqpaxos-agreement n={n} f={f} |V|={value_size} k={k}: {report.verdict.value}")
    return report


# =============================================================================
# SimpleVote
# =============================================================================

def check_simple_vote_safety(n: int, f: int, b: int) -> CheckReport:
    """When every good node starts with B, the leader can only output Some B."""
    base = build_instance(ProtocolName.SIMPLE_VOTE, n=n, f=f, b=b)
    g = base.config[REPLICA].g
    counterexample = None
    for B in BOOLS:
        inst = base.with_inputs({LEADER: (B,), REPLICA: (B,) * g})
        for record in sorted_outputs(denote_closed(inst.config, inst.closed())):
            if record[LEADER] != (some(B),):
                counterexample = {"input": value_to_plain(B), "output": record.to_json()}
                break
    return CheckReport.from_outcome(
        CheckName.SIMPLE_VOTE_SAFETY.value, counterexample is None,
        precondition_met=resilience_met(ProtocolName.SIMPLE_VOTE, n, f),
        counterexample=counterexample,
    )


# =============================================================================
# Operational checks
# =============================================================================

def check_instance_adequacy(
    inst: ProtocolInstance,
    budget: Budget = Budget(),
    jobs: int = 1,
    after_receive: bool = False,
    materialize_lists: bool = False,
) -> CheckReport:
    report = check_adequacy(inst.closed(), inst.config, budget, jobs=jobs, after_receive=after_receive,
                            materialize_lists=materialize_lists)
    report.details["protocol"] = inst.name.value
    report.precondition_met = inst.precondition_met
    return report


def check_trace_lemmas(
    inst: ProtocolInstance,
    count: int = DEFAULT_SAMPLED_TRACES,
    seed: int = 0,
) -> CheckReport:
    """
    Over count seeded random traces: aligned traces replay to the same final
    state, align is idempotent and keeps every projection, each component
    replays its projection, re-stitched projections replay globally, node
    projections follow the channel order, and completed outputs lie in the
    denotation.
    """
    sys = global_compile(inst.closed(), inst.config)
    den = denote_closed(inst.config, inst.closed())
    failures: Dict[str, int] = {name: 0 for name in (
        "permissible", "aligned_permissible", "aligned_state", "idempotent", "projections",
        "decomposition", "composition", "channel_order", "output_in_denotation",
    )}
    counterexample: Optional[dict] = None
    completed = 0
    for index, labels in enumerate(sample_traces(sys, count, seed)):
        failed = []
        replay = is_permissible(sys, labels)
        aligned = align(sys.delta, labels)
        aligned_replay = is_permissible(sys, aligned)
        if not replay.ok:
            failed.append("permissible")
        if not aligned_replay.ok:
            failed.append("aligned_permissible")
        elif aligned_replay.state != replay.state:
            failed.append("aligned_state")
        if align(sys.delta, aligned) != aligned:
            failed.append("idempotent")
        if any(project_labels(aligned, c) != project_labels(labels, c) for c in sys.components):
            failed.append("projections")
        if not check_decomposition(sys, labels):
            failed.append("decomposition")
        if not check_composition(sys, labels):
            failed.append("composition")
        if not all(respects_order(project_labels(labels, node), sys.delta, node.role) for node in sys.node_ids):
            failed.append("channel_order")
        if replay.ok and is_completed(replay.state):
            completed += 1
            if extract(sys, replay.state).restrict(sys.result_roles) not in den:
                failed.append("output_in_denotation")
        for name in failed:
            failures[name] += 1
        if failed and counterexample is None:
            counterexample = {"seed": seed + index, "failed": failed,
                              "trace": [label_to_json(label) for label in labels]}

    holds = not any(failures.values())
    return CheckReport.from_outcome(
        CheckName.ALIGNMENT.value, holds,
        precondition_met=inst.precondition_met,
        details={"protocol": inst.name.value, "traces": count, "completed": completed, "failures": failures},
        counterexample=counterexample,
    )
