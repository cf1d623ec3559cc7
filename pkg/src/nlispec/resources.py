"""Paths of data files shipped inside the package."""

from importlib import resources


def data_path(name: str) -> str:
    """Filesystem path of a shipped data file."""
    return str(resources.files("nlispec").joinpath("data", name))
