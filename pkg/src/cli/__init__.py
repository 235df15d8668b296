"""
Command-Line Interface
"""

from .commands import build_parser, configure_logging, load_config, run

__all__ = ["build_parser", "configure_logging", "load_config", "run"]
