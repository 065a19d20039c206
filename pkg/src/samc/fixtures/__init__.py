"""Bundled example models and policies, usable from tests and the CLI."""

from importlib import resources


def path(name: str) -> str:
    """Filesystem path of a bundled fixture file."""
    return str(resources.files(__package__).joinpath(name))


def read(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")
