"""
Choreo - Trace Files

A trace file is JSON lines. The first line is the header, every later line
one global label:

    {"header": {"version": 1, "instance": {...}, "delta": ["c.0:(R,L,bool)"],
                "program_sha256": "...", "seed": 7, "flags": {...}}}
    {"label": {"kind": "send", "node": "R/0", "chan": "c.0", "v": {...}}}
    ...

The header carries everything needed to rebuild the program and
configuration; replay refuses a file whose rebuilt program hashes or
channel context differ from the recorded ones.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from choreo.common.paths import safe_write_text
from choreo.constants import TRACE_FORMAT_VERSION
from choreo.exceptions.choreo_exception import ChoreoException
from choreo.exceptions.trace_format_exception import TraceFormatException
from choreo.global_lts import GlobalLabel, GlobalSystem, global_compile, label_from_json, label_to_json
from choreo.hll import Program, program_to_json
from choreo.protocols import ProtocolInstance, instance_from_json

logger = logging.getLogger(__name__)


def program_sha256(p: Program) -> str:
    canonical = json.dumps(program_to_json(p), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class TraceHeader:
    instance: Dict[str, Any]
    delta: List[str]
    program_sha256: str
    seed: Optional[int] = None
    flags: Dict[str, Any] = field(default_factory=dict)
    version: int = TRACE_FORMAT_VERSION

    @classmethod
    def for_run(cls, inst: ProtocolInstance, sys: GlobalSystem, seed: Optional[int] = None,
                flags: Optional[Dict[str, Any]] = None) -> 'TraceHeader':
        return cls(
            instance=inst.to_json(),
            delta=[str(entry) for entry in sys.delta],
            program_sha256=program_sha256(sys.program),
            seed=seed,
            flags=dict(flags or {}),
        )

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "instance": self.instance,
            "delta": self.delta,
            "program_sha256": self.program_sha256,
            "seed": self.seed,
            "flags": self.flags,
        }


def encoded_trace_to_jsonl(header: TraceHeader, encoded_labels: Sequence[dict]) -> str:
    lines = [json.dumps({"header": header.to_json()}, sort_keys=True)]
    lines.extend(json.dumps({"label": obj}, sort_keys=True) for obj in encoded_labels)
    return "\n".join(lines) + "\n"


def trace_to_jsonl(header: TraceHeader, labels: Sequence[GlobalLabel]) -> str:
    return encoded_trace_to_jsonl(header, [label_to_json(label) for label in labels])


def write_trace(path: Path, header: TraceHeader, labels: Sequence[GlobalLabel]) -> Path:
    safe_write_text(path, trace_to_jsonl(header, labels))
    logger.info(f"Wrote {len(labels)} label(s) to {path}")
    return path


@dataclass
class LoadedTrace:
    header: TraceHeader
    instance: ProtocolInstance
    system: GlobalSystem
    labels: List[GlobalLabel]


def _parse_lines(path: Path, text: str) -> List[dict]:
    objects = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatException(path, f"line {number} is not JSON ({e.msg})") from e
        if not isinstance(obj, dict):
            raise TraceFormatException(path, f"line {number} is not a JSON object")
        objects.append(obj)
    return objects


def read_trace(path: Path) -> LoadedTrace:
    """
    Load a trace file and rebuild its system.

    Raises:
        TraceFormatException: unreadable, malformed, or the header does not
        match the program it describes.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise TraceFormatException(path, f"cannot read ({e.strerror})") from e
    objects = _parse_lines(path, text)
    if not objects or "header" not in objects[0]:
        raise TraceFormatException(path, "first line must be the header")

    raw = objects[0]["header"]
    try:
        header = TraceHeader(
            instance=raw["instance"],
            delta=list(raw["delta"]),
            program_sha256=raw["program_sha256"],
            seed=raw.get("seed"),
            flags=raw.get("flags", {}),
            version=raw["version"],
        )
    except (KeyError, TypeError) as e:
        raise TraceFormatException(path, f"header field missing: {e}") from e
    if header.version != TRACE_FORMAT_VERSION:
        raise TraceFormatException(path, f"version {header.version} is not supported")

    try:
        inst = instance_from_json(header.instance)
        sys = global_compile(inst.closed(), inst.config)
    except ChoreoException as e:
        raise TraceFormatException(path, f"header does not describe a valid run: {e.message}") from e
    if program_sha256(sys.program) != header.program_sha256:
        raise TraceFormatException(path, "program hash mismatch")
    if [str(entry) for entry in sys.delta] != header.delta:
        raise TraceFormatException(path, "channel context mismatch")

    labels = []
    for number, obj in enumerate(objects[1:], start=2):
        if "label" not in obj:
            raise TraceFormatException(path, f"line {number} has no label")
        try:
            labels.append(label_from_json(obj["label"], sys))
        except TraceFormatException as e:
            raise TraceFormatException(path, f"line {number}: {e.detail}") from e
    logger.debug(f"Read {len(labels)} label(s) from {path}")
    return LoadedTrace(header, inst, sys, labels)
