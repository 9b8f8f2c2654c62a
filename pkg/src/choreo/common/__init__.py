# Choreo - Common Utilities
#
# Shared logging setup and path helpers used by the CLI and the checkers.
# Import directly from the specific module, not from this __init__.py.
#
# Example:
#   from choreo.common.logging_config import setup_logging
#   from choreo.common.paths import output_dir
