from cli.commands import build_parser, dispatch

__all__ = ["build_parser", "dispatch"]
