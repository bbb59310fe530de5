"""Petri nets for tree-structured workflows, and trace conformance against them.

``compile`` maps an activity tree onto a workflow net by structural
recursion: an atomic activity is one labelled transition between two
places, a sequence chains its children through shared places, a parallel
activity gets an unlabelled split and join, and a conditional activity an
unlabelled routing transition per branch out of one shared place (the
branches compete for its token) plus a merge transition per branch into
the common output place.

The nets are acyclic and safe, so the set of maximal runs is finite and
can be enumerated; a trace conforms iff it is one of them, projected onto
the labelled transitions.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

from .wild.model import ActivityNode, WorkflowModel

Marking = tuple  # sorted tuple of (place, tokens) with tokens > 0


class StateSpaceExceeded(RuntimeError):
    """Enumeration visited more markings (or longer runs) than allowed."""


@dataclass(frozen=True)
class Transition:
    name: str
    label: Optional[str]
    inputs: tuple
    outputs: tuple


@dataclass
class PetriNet:
    places: list = field(default_factory=list)
    transitions: list = field(default_factory=list)
    initial: dict = field(default_factory=dict)
    final: Optional[str] = None

    def add_place(self) -> str:
        name = f"p{len(self.places)}"
        self.places.append(name)
        return name

    def add_transition(self, inputs: Sequence[str], outputs: Sequence[str],
                       label: Optional[str] = None) -> Transition:
        t = Transition(f"t{len(self.transitions)}", label, tuple(inputs), tuple(outputs))
        self.transitions.append(t)
        return t

    @property
    def arcs(self) -> list[tuple[str, str]]:
        out = []
        for t in self.transitions:
            out += [(p, t.name) for p in t.inputs] + [(t.name, p) for p in t.outputs]
        return out

    def labels(self) -> set[str]:
        return {t.label for t in self.transitions if t.label is not None}

    def initial_marking(self) -> Marking:
        return _freeze(self.initial)

    def enabled(self, marking: Marking) -> list[Transition]:
        m = dict(marking)
        return [t for t in self.transitions
                if all(m.get(p, 0) >= n for p, n in Counter(t.inputs).items())]

    def fire(self, marking: Marking, t: Transition) -> Marking:
        m = Counter(dict(marking))
        m.subtract(Counter(t.inputs))
        m.update(Counter(t.outputs))
        return _freeze(m)

    def to_text(self) -> str:
        """Plain place/transition/arc listing, one item per line."""
        lines = [f"place {p}" for p in self.places]
        for t in self.transitions:
            lines.append(f"transition {t.name}" + (f" label <{t.label}>" if t.label else ""))
        lines += [f"arc {a} {b}" for a, b in self.arcs]
        lines += [f"initial {p} {n}" for p, n in sorted(self.initial.items())]
        if self.final is not None:
            lines.append(f"final {self.final}")
        return "\n".join(lines) + "\n"


def _freeze(m) -> Marking:
    return tuple(sorted((p, n) for p, n in dict(m).items() if n > 0))


def _label(node: ActivityNode) -> str:
    return getattr(node.iri, "value", str(node.iri))


def compile(model: Union[WorkflowModel, ActivityNode]) -> PetriNet:
    """Compile an activity tree into a workflow net with one start and one end place."""
    root = model.root if isinstance(model, WorkflowModel) else model
    net = PetriNet()
    start, end = net.add_place(), net.add_place()

    def build(node: ActivityNode, p_in: str, p_out: str) -> None:
        if node.kind == "atomic":
            net.add_transition([p_in], [p_out], _label(node))
        elif node.kind == "sequential":
            places = [p_in] + [net.add_place() for _ in node.children[1:]] + [p_out]
            for child, a, b in zip(node.children, places, places[1:]):
                build(child, a, b)
        elif node.kind == "parallel":
            ins = [net.add_place() for _ in node.children]
            outs = [net.add_place() for _ in node.children]
            net.add_transition([p_in], ins)
            for child, a, b in zip(node.children, ins, outs):
                build(child, a, b)
            net.add_transition(outs, [p_out])
        elif node.kind == "conditional":
            for child in node.children:
                a, b = net.add_place(), net.add_place()
                net.add_transition([p_in], [a])
                build(child, a, b)
                net.add_transition([b], [p_out])
        else:
            raise ValueError(f"unknown activity kind {node.kind!r}")

    build(root, start, end)
    net.initial = {start: 1}
    net.final = end
    return net


def _explore(net: PetriNet, cap: int):
    seen = {net.initial_marking()}
    stack = [net.initial_marking()]
    while stack:
        m = stack.pop()
        yield m
        for t in net.enabled(m):
            n = net.fire(m, t)
            if n not in seen:
                if len(seen) >= cap:
                    raise StateSpaceExceeded(f"more than {cap} reachable markings")
                seen.add(n)
                stack.append(n)


def reachable_markings(net: PetriNet, cap: int = 100_000) -> list[Marking]:
    return list(_explore(net, cap))


def is_safe(net: PetriNet, cap: int = 100_000) -> bool:
    """No reachable marking puts more than one token on a place."""
    return all(n <= 1 for m in _explore(net, cap) for _, n in m)


def is_sound(net: PetriNet, cap: int = 100_000) -> bool:
    """Every reachable dead marking is exactly one token on the final place."""
    final = ((net.final, 1),)
    return all(net.enabled(m) or m == final for m in _explore(net, cap))


def firing_sequences(net: PetriNet, bound: Optional[int] = None,
                     cap: int = 100_000) -> set[tuple[str, ...]]:
    """All maximal runs from the initial marking, projected onto labels.

    bound limits the run length (default: the number of transitions, enough
    for the acyclic nets compile produces); cap limits the number of
    distinct markings. Exceeding either raises StateSpaceExceeded.
    """
    bound = len(net.transitions) if bound is None else bound
    if bound < 0:
        raise ValueError("bound must be non-negative")
    visited = 0

    @lru_cache(maxsize=None)
    def runs(marking: Marking, depth: int) -> frozenset:
        nonlocal visited
        visited += 1
        if visited > cap:
            raise StateSpaceExceeded(f"more than {cap} markings visited")
        enabled = net.enabled(marking)
        if not enabled:
            return frozenset({()})
        if depth >= bound:
            raise StateSpaceExceeded(f"a run is longer than the bound {bound}")
        out = set()
        for t in enabled:
            head = (t.label,) if t.label is not None else ()
            out |= {head + rest for rest in runs(net.fire(marking, t), depth + 1)}
        return frozenset(out)

    return set(runs(net.initial_marking(), 0))


def _normalise(trace: Iterable) -> tuple[str, ...]:
    return tuple(getattr(x, "value", x) for x in trace)


def conformance(trace: Iterable, net: PetriNet, bound: Optional[int] = None) -> bool:
    """True iff trace is exactly one of the net's labelled firing sequences."""
    return _normalise(trace) in firing_sequences(net, bound)


@dataclass(frozen=True)
class Verdict:
    conformant: bool
    position: Optional[int] = None
    expected: tuple = ()
    found: Optional[str] = None

    def __str__(self) -> str:
        if self.conformant:
            return "conformant"
        found = "end of trace" if self.found is None else self.found
        options = ", ".join(self.expected) if self.expected else "end of trace"
        return (f"not conformant at position {self.position}: found {found}, "
                f"expected one of: {options}")


def verify(trace: Iterable, net: PetriNet, bound: Optional[int] = None) -> Verdict:
    """Conformance with a counterexample position.

    The position is the length of the longest prefix of trace that some
    firing sequence shares; expected lists the labels (or end of trace)
    that would have been allowed there.
    """
    trace = _normalise(trace)
    sequences = firing_sequences(net, bound)
    if trace in sequences:
        return Verdict(True)
    pos = 0
    while any(len(s) > pos and s[:pos + 1] == trace[:pos + 1] for s in sequences) \
            and pos < len(trace):
        pos += 1
    allowed = sorted({s[pos] for s in sequences if s[:pos] == trace[:pos] and len(s) > pos})
    return Verdict(False, pos, tuple(allowed), trace[pos] if pos < len(trace) else None)
