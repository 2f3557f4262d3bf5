"""Access to bundled automaton and task documents."""
from __future__ import annotations

from importlib.resources import files
from pathlib import Path


def data_path(kind: str, name: str = "") -> Path:
    """Path to a bundled data file (kind is 'automata' or 'tasks')."""
    root = files("ltlrl").joinpath("data", kind)
    return Path(str(root.joinpath(name) if name else root))


def list_bundled(kind: str) -> list[str]:
    return sorted(p.name for p in data_path(kind).glob("*.json"))
