"""Command line pipeline: configuration, figures and the ``polsar-cvnn`` entry point."""
from .config import RunConfig, dump_config, load_config, parse_config
from .main import main

__all__ = ["RunConfig", "dump_config", "load_config", "parse_config", "main"]
