"""Bundled metric files."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

NAMES = (
    "milne", "polar4d", "sphere2", "hyperbolic2", "schwarzschild", "anisotropic4d",
    "euclid_2", "euclid_3", "euclid_4", "euclid_5",
)


def fixture_path(name: str) -> Path:
    if name not in NAMES:
        raise KeyError(f"no bundled fixture {name!r}")
    return Path(str(resources.files(__name__).joinpath(f"{name}.metric")))


def load_fixture(name: str):
    from ..metric import load
    return load(fixture_path(name).read_text(encoding="utf-8"), name=name)
