"""
Choreo - Shared Path Helpers

Where trace files and counterexamples are written, plus the fsync-on-write
helper every writer goes through.

Directory structure (default ./choreo-out, override with CHOREO_OUTPUT_DIR):
  choreo-out/
    ├── counterexamples/     # Traces witnessing a violated check
    └── traces/              # Traces written by `simulate` without --out
"""

import os
from pathlib import Path

from choreo.constants import OUTPUT_DIR_ENV_VAR

DEFAULT_OUTPUT_DIR = Path('choreo-out')
COUNTEREXAMPLES_SUBDIR = 'counterexamples'
TRACES_SUBDIR = 'traces'


def output_dir() -> Path:
    """Return the output root, honoring CHOREO_OUTPUT_DIR."""
    raw = os.environ.get(OUTPUT_DIR_ENV_VAR, '').strip()
    return Path(raw) if raw else DEFAULT_OUTPUT_DIR


def counterexample_path(name: str) -> Path:
    return output_dir() / COUNTEREXAMPLES_SUBDIR / f"{name}.jsonl"


def trace_path(name: str) -> Path:
    return output_dir() / TRACES_SUBDIR / f"{name}.jsonl"


# =============================================================================
# File writing utilities
# =============================================================================

def safe_write_text(path: Path, content: str, mode: int = 0o644):
    """
    Write text to file and ensure it's flushed to disk immediately.

    Creates parent directories as needed.

    Args:
        path: Path to write to
        content: Text content to write
        mode: File permissions (default 0o644)
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write(content)
        f.flush()
        os.fsync(f.fileno())
    os.chmod(path, mode)
