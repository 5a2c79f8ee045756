"""Bundled case files.

``case_a``/``case_b``/``case_c`` are single-bus cases small enough to solve by
hand; ``demo24`` is a synthetic 6-bus, 24-period case with eight
contingency/fluctuation scenarios per period.
"""

from __future__ import annotations

from importlib import resources

from ..casefile import load_case

NAMES = ("case_a", "case_b", "case_c", "demo24")


def case_path(name):
    if name not in NAMES:
        raise KeyError(f"no bundled case {name!r}; available: {', '.join(NAMES)}")
    return resources.files(__name__).joinpath(f"{name}.json")


def load_bundled(name, strict=False):
    with resources.as_file(case_path(name)) as path:
        return load_case(path, strict)


def case_a():
    return load_bundled("case_a")


def case_b():
    return load_bundled("case_b")


def case_c():
    return load_bundled("case_c")


def demo24():
    return load_bundled("demo24")
