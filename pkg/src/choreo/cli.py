#!/usr/bin/env python3
"""
Choreo - Command Line Front End

Subcommands:
    enumerate   denotational output set of a protocol instance
    check       run a named property check and exit with its verdict
    simulate    write one seeded random trace of the asynchronous system
    replay      replay a trace file and report permissibility

Configuration: flags, optionally seeded from a JSON file given with
--config (flags win over the file, the file wins over defaults). CHOREO_SEED
supplies the seed when --seed is absent.

Results go to stdout as canonical JSON; logs go to stderr.

Exit codes:
    0  holds (exhaustively)
    1  violated; the counterexample path is printed on stderr
    2  inconclusive; an exploration budget ran out
    3  usage error
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from choreo.checks import (
    check_agreement_bosco,
    check_agreement_seqpaxos,
    check_counting_lemma,
    check_instance_adequacy,
    check_one_step,
    check_simple_vote_safety,
    check_trace_lemmas,
    check_uc_prime,
)
from choreo.choreo_enums import CheckName, ProtocolName, Verdict
from choreo.common.logging_config import log_run_start, setup_logging
from choreo.common.paths import counterexample_path, safe_write_text, trace_path
from choreo.constants import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_SECONDS,
    DEFAULT_MAX_STATES,
    DEFAULT_SAMPLED_TRACES,
    DEFAULT_SEED,
    EXIT_HOLDS,
    EXIT_INCONCLUSIVE,
    EXIT_USAGE,
    EXIT_VIOLATION,
    SEED_ENV_VAR,
)
from choreo.denote import denote_closed, output_set_to_json
from choreo.exceptions.choreo_exception import ChoreoException
from choreo.global_lts import (
    Budget,
    align,
    extract,
    global_compile,
    is_completed,
    is_permissible,
    simulate,
    state_to_json,
)
from choreo.protocols import ProtocolInstance, build_instance
from choreo.report import CheckReport
from choreo.traces import TraceHeader, encoded_trace_to_jsonl, read_trace, write_trace

logger = logging.getLogger(__name__)

VERDICT_EXIT_CODES = {
    Verdict.HOLDS: EXIT_HOLDS,
    Verdict.VIOLATED: EXIT_VIOLATION,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}

# (n, f, b) used by the Bosco-style checks when no flag or config sets them
CHECK_DEFAULTS: Dict[CheckName, tuple] = {
    CheckName.ONE_STEP: (8, 1, 1),
    CheckName.BOSCO_AGREEMENT: (4, 1, 1),
    CheckName.COUNTING_LEMMA: (4, 1, 1),
    CheckName.UC_PRIME: (4, 1, 1),
    CheckName.SIMPLE_VOTE_SAFETY: (4, 1, 1),
    CheckName.SEQPAXOS_AGREEMENT: (3, 1, 0),
}

CONFIG_KEYS = {
    "protocol", "n", "f", "b", "iterations", "value_size", "inputs", "asymmetric_bosco", "seed",
    "max_states", "max_depth", "seconds", "jobs", "materialize_lists", "byz_after_receive", "traces",
}


class ChoreoArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 means inconclusive here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# =============================================================================
# Run settings
# =============================================================================

@dataclass(frozen=True)
class RunSpec:
    protocol: ProtocolName
    n: Optional[int]
    f: Optional[int]
    b: Optional[int]
    iterations: Optional[int]
    value_size: Optional[int]
    inputs: Optional[Dict[str, list]]
    asymmetric: bool
    budget: Budget
    seed: int
    jobs: int
    materialize_lists: bool
    byz_after_receive: bool

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'RunSpec':
        inputs = args.inputs
        if isinstance(inputs, str):
            try:
                inputs = json.loads(inputs)
            except json.JSONDecodeError as e:
                raise ChoreoException(f"--inputs is not JSON: {e.msg}") from e
        if inputs is not None and not isinstance(inputs, dict):
            raise ChoreoException("--inputs must be a JSON object mapping roles to lists.")
        try:
            protocol = ProtocolName(args.protocol)
        except ValueError:
            raise ChoreoException(f"Unknown protocol '{args.protocol}'.") from None
        if args.jobs < 1:
            raise ChoreoException(f"--jobs must be at least 1, got {args.jobs}.")
        return cls(
            protocol=protocol,
            n=args.n,
            f=args.f,
            b=args.b,
            iterations=args.iterations,
            value_size=args.value_size,
            inputs=inputs,
            asymmetric=args.asymmetric_bosco,
            budget=Budget(args.max_states, args.max_depth, args.seconds),
            seed=resolve_seed(args.seed),
            jobs=args.jobs,
            materialize_lists=args.materialize_lists,
            byz_after_receive=args.byz_after_receive,
        )

    def instance(self) -> ProtocolInstance:
        return build_instance(
            self.protocol, n=self.n, f=self.f, b=self.b, iterations=self.iterations,
            value_size=self.value_size, inputs=self.inputs, asymmetric=self.asymmetric,
        )

    def params_for(self, check: CheckName) -> tuple:
        n, f, b = CHECK_DEFAULTS[check]
        return (
            n if self.n is None else self.n,
            f if self.f is None else self.f,
            b if self.b is None else self.b,
        )

    @property
    def flags(self) -> Dict[str, Any]:
        return {
            "materialize_lists": self.materialize_lists,
            "byz_after_receive": self.byz_after_receive,
            "asymmetric_bosco": self.asymmetric,
        }


def resolve_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    raw = os.environ.get(SEED_ENV_VAR, "").strip()
    if not raw:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ChoreoException(f"{SEED_ENV_VAR} must be an integer, got '{raw}'.") from None


# =============================================================================
# Argument parsing
# =============================================================================

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with defaults for any of these options')
    common.add_argument('--protocol', choices=[p.value for p in ProtocolName], default=ProtocolName.SIMPLE_VOTE.value)
    common.add_argument('--n', type=int, help='Nodes in the replica role')
    common.add_argument('--f', type=int, help='Fault bound of the replica role')
    common.add_argument('--b', type=int, help='Byzantine nodes actually present in the replica role')
    common.add_argument('--iterations', type=int, help='Extra loop iterations (0 runs the body once)')
    common.add_argument('--value-size', type=int, help='Size of the SeqPaxos value domain')
    common.add_argument('--inputs', help='JSON object: role name -> list of input values')
    common.add_argument('--asymmetric-bosco', action='store_true', help='Decide true at 2cnt >= n + 3f')
    common.add_argument('--seed', type=int, help=f'Random seed (falls back to {SEED_ENV_VAR})')
    common.add_argument('--max-states', type=int, default=DEFAULT_MAX_STATES)
    common.add_argument('--max-depth', type=int, default=DEFAULT_MAX_DEPTH)
    common.add_argument('--seconds', type=float, default=DEFAULT_MAX_SECONDS, help='Wall-clock budget')
    common.add_argument('--jobs', type=int, default=1, help='Worker threads for exploration')
    common.add_argument('--materialize-lists', action='store_true',
                        help='Fold every message order, even for commutative functions')
    common.add_argument('--byz-after-receive', action='store_true',
                        help='Let Byzantine nodes send to receivers that already received')
    return common


def build_parser(defaults: Optional[Dict[str, Any]] = None) -> ChoreoArgumentParser:
    """defaults, when given, replace the built-in defaults of every subcommand."""
    parser = ChoreoArgumentParser(prog='choreo', description='Enumerate, explore and check choreographic protocols')
    common = _common_options()
    sub = parser.add_subparsers(dest='command', required=True)

    enumerate_cmd = sub.add_parser('enumerate', parents=[common], help='Denotational output set')

    check = sub.add_parser('check', parents=[common], help='Run a property check')
    check.add_argument('name', choices=[c.value for c in CheckName])
    check.add_argument('--traces', type=int, default=DEFAULT_SAMPLED_TRACES, help='Traces sampled by alignment')

    simulate_cmd = sub.add_parser('simulate', parents=[common], help='Write one seeded random trace')
    simulate_cmd.add_argument('--out', help='Trace file path')
    simulate_cmd.add_argument('--align', action='store_true', help='Align the trace before writing it')
    simulate_cmd.add_argument('--dump-channels', action='store_true', help='Include final channel states')

    replay = sub.add_parser('replay', parents=[common], help='Replay a trace file')
    replay.add_argument('trace', help='Trace file written by simulate or check')
    replay.add_argument('--align', action='store_true', help='Align the trace before replaying it')
    if defaults:
        for subparser in (enumerate_cmd, check, simulate_cmd, replay):
            subparser.set_defaults(**defaults)
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args

    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as e:
        parser.error(f"cannot read --config {args.config}: {e.strerror}")
    except json.JSONDecodeError as e:
        parser.error(f"--config {args.config} is not JSON: {e.msg}")
    if not isinstance(data, dict):
        parser.error("--config must hold a JSON object")
    defaults = {key.replace('-', '_'): value for key, value in data.items()}
    unknown = sorted(set(defaults) - CONFIG_KEYS)
    if unknown:
        parser.error(f"unknown key(s) in --config: {', '.join(unknown)}")
    if isinstance(defaults.get('inputs'), dict):
        defaults['inputs'] = json.dumps(defaults['inputs'])

    return build_parser(defaults).parse_args(argv)


# =============================================================================
# Output helpers
# =============================================================================

def emit(obj: Any):
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    sys.stdout.flush()


def write_counterexample(report: CheckReport, inst: Optional[ProtocolInstance], spec: RunSpec) -> Optional[Path]:
    """Counterexamples with a trace become trace files; others a single JSON line."""
    if report.counterexample is None:
        return None
    path = counterexample_path(report.name)
    trace = report.counterexample.get("trace")
    if trace is not None and inst is not None:
        sys_ = global_compile(inst.closed(), inst.config)
        header = TraceHeader.for_run(inst, sys_, spec.seed, spec.flags)
        safe_write_text(path, encoded_trace_to_jsonl(header, trace))
    else:
        safe_write_text(path, json.dumps({"counterexample": report.counterexample}, sort_keys=True) + "\n")
    print(f"counterexample written to {path}", file=sys.stderr)
    return path


# =============================================================================
# Subcommands
# =============================================================================

def cmd_enumerate(spec: RunSpec) -> int:
    inst = spec.instance()
    outputs = denote_closed(inst.config, inst.closed(), spec.materialize_lists)
    emit({
        "protocol": inst.name.value,
        "instance": inst.to_json(),
        "count": len(outputs),
        "outputs": output_set_to_json(outputs),
    })
    return EXIT_HOLDS


def run_check(name: CheckName, spec: RunSpec, traces: int = DEFAULT_SAMPLED_TRACES) -> tuple:
    """Returns (report, instance or None)."""
    if name == CheckName.ADEQUACY:
        inst = spec.instance()
        return check_instance_adequacy(inst, spec.budget, spec.jobs, spec.byz_after_receive,
                                       spec.materialize_lists), inst
    if name == CheckName.ALIGNMENT:
        inst = spec.instance()
        return check_trace_lemmas(inst, traces, spec.seed), inst

    n, f, b = spec.params_for(name)
    if name == CheckName.ONE_STEP:
        return check_one_step(n, f, b), None
    if name == CheckName.BOSCO_AGREEMENT:
        return check_agreement_bosco(n, f, b, spec.iterations or 0, spec.asymmetric), None
    if name == CheckName.COUNTING_LEMMA:
        return check_counting_lemma(n, f, b), None
    if name == CheckName.UC_PRIME:
        return check_uc_prime(n, f, b, spec.asymmetric), None
    if name == CheckName.SIMPLE_VOTE_SAFETY:
        return check_simple_vote_safety(n, f, b), None
    k = 2 if spec.iterations is None else spec.iterations
    return check_agreement_seqpaxos(n, f, spec.value_size or 2, k), None


def cmd_check(spec: RunSpec, name: CheckName, traces: int) -> int:
    report, inst = run_check(name, spec, traces)
    emit(report.to_json())
    write_counterexample(report, inst, spec)
    if not report.precondition_met:
        print(f"{name.value}: resilience precondition not met for this configuration", file=sys.stderr)
    return VERDICT_EXIT_CODES[report.verdict]


def cmd_simulate(spec: RunSpec, out: Optional[str], do_align: bool, dump_channels: bool) -> int:
    inst = spec.instance()
    sys_ = global_compile(inst.closed(), inst.config)
    labels, final = simulate(sys_, spec.seed, spec.byz_after_receive)
    permissible = True
    if do_align:
        labels = align(sys_.delta, labels)
        replay = is_permissible(sys_, labels)
        permissible = replay.ok and replay.state == final

    path = Path(out) if out else trace_path(f"{inst.name.value}-seed{spec.seed}")
    write_trace(path, TraceHeader.for_run(inst, sys_, spec.seed, spec.flags), labels)

    result: Dict[str, Any] = {
        "trace": str(path),
        "labels": len(labels),
        "aligned": do_align,
        "permissible": permissible,
        "completed": is_completed(final),
    }
    in_denotation = True
    if is_completed(final):
        output = extract(sys_, final).restrict(sys_.result_roles)
        in_denotation = output in denote_closed(inst.config, inst.closed())
        result["output"] = output.to_json()
        result["in_denotation"] = in_denotation
    if dump_channels:
        result["state"] = state_to_json(sys_, final)
    emit(result)
    return EXIT_HOLDS if permissible and in_denotation else EXIT_VIOLATION


def cmd_replay(trace: str, do_align: bool) -> int:
    loaded = read_trace(Path(trace))
    labels = align(loaded.system.delta, loaded.labels) if do_align else loaded.labels
    replay = is_permissible(loaded.system, labels)
    result: Dict[str, Any] = {
        "trace": trace,
        "labels": len(labels),
        "aligned": do_align,
        "permissible": replay.ok,
        "completed": is_completed(replay.state),
    }
    if not replay.ok:
        result["failed_at"] = replay.failed_at
        result["reason"] = replay.reason
    elif is_completed(replay.state):
        result["output"] = extract(loaded.system, replay.state).restrict(loaded.system.result_roles).to_json()
    emit(result)
    return EXIT_HOLDS if replay.ok else EXIT_VIOLATION


# =============================================================================
# Entry point
# =============================================================================

def run(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    log = setup_logging('choreo.cli')
    log_run_start(log, f"Choreo {args.command}")
    try:
        spec = RunSpec.from_args(args)
        if args.command == 'enumerate':
            return cmd_enumerate(spec)
        if args.command == 'check':
            return cmd_check(spec, CheckName(args.name), args.traces)
        if args.command == 'simulate':
            return cmd_simulate(spec, args.out, args.align, args.dump_channels)
        return cmd_replay(args.trace, args.align)
    except ChoreoException as e:
        log.error(e.message)
        print(f"choreo: error: {e.message}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
