"""
Choreo - Constants

Default exploration budgets, CLI exit codes and environment variable names.
"""

# Exploration budget defaults
DEFAULT_MAX_STATES = 2_000_000
DEFAULT_MAX_DEPTH = 10_000
DEFAULT_MAX_SECONDS = 900

# Number of traces sampled for alignment / decomposition checks
DEFAULT_SAMPLED_TRACES = 200

# CLI exit codes
EXIT_HOLDS = 0
EXIT_VIOLATION = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3

# Environment variables
SEED_ENV_VAR = "CHOREO_SEED"
LOG_LEVEL_ENV_VAR = "CHOREO_LOG_LEVEL"
OUTPUT_DIR_ENV_VAR = "CHOREO_OUTPUT_DIR"

DEFAULT_SEED = 0

# Trace file format version, written into every header
TRACE_FORMAT_VERSION = 1
