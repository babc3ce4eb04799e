"""Query descriptors: a single path coefficient or a total effect."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import InputError
from .graph import CausalGraph


@dataclass(frozen=True)
class TargetEdge:
    """The coefficient on the directed edge ``x -> y``."""

    x: str
    y: str

    def validate(self, g: CausalGraph) -> None:
        g.check(self.x, self.y)
        if (self.x, self.y) not in g.directed:
            raise InputError(f"target edge {self.x}->{self.y} is not in the graph")

    def __str__(self) -> str:
        return f"edge:{self.x}->{self.y}"


@dataclass(frozen=True)
class TotalEffect:
    """Sum over directed paths from ``x`` to ``z`` of coefficient products."""

    x: str
    z: str

    def validate(self, g: CausalGraph) -> None:
        g.check(self.x, self.z)
        if g.index(self.x) >= g.index(self.z):
            raise InputError(f"total effect {self.x}->{self.z} needs {self.x} before {self.z}")

    def __str__(self) -> str:
        return f"te:{self.x}->{self.z}"


Query = Union[TargetEdge, TotalEffect]


def parse_query(text: str) -> Query:
    """Parse ``edge:a->b`` or ``te:a->b``."""
    kind, sep, rest = text.strip().partition(":")
    if not sep or "->" not in rest:
        raise InputError(f"query {text!r} must look like 'edge:x->y' or 'te:x->z'")
    a, _, b = rest.partition("->")
    a, b = a.strip(), b.strip()
    if not a or not b:
        raise InputError(f"query {text!r} is missing a variable name")
    if kind == "edge":
        return TargetEdge(a, b)
    if kind == "te":
        return TotalEffect(a, b)
    raise InputError(f"unknown query kind {kind!r} (expected 'edge' or 'te')")
