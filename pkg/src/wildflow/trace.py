"""Trace logs: one state transition per line, as written by ``wildflow run``.

Format (tab separated, ``-`` for a missing value)::

    # model http://example.org/wf#wfm
    3	http://example.org/instances/4#it	http://example.org/wf#A	active	done

Columns: cycle index, instance IRI, activity IRI, old state, new state.
States are written by local name when they are in the workflow namespace.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .rdf import WILD
from .runtime import StateChange


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class TraceEvent:
    cycle: int
    instance: str
    activity: Optional[str]
    old: Optional[str]
    new: str

    @classmethod
    def from_change(cls, c: StateChange) -> "TraceEvent":
        return cls(c.cycle, c.instance, c.activity, _short(c.old), _short(c.new))

    def line(self) -> str:
        return "\t".join([str(self.cycle), self.instance, self.activity or "-",
                          self.old or "-", self.new])


def _short(state: Optional[str]) -> Optional[str]:
    if state is not None and state.startswith(WILD):
        return state[len(WILD):]
    return state


def format_trace(events: Iterable[TraceEvent], model: Optional[str] = None) -> str:
    lines = [f"# model {model}"] if model else []
    lines += [e.line() for e in events]
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> tuple[Optional[str], list[TraceEvent]]:
    """Return the model named in the header (if any) and the events."""
    model, events = None, []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) == 2 and words[0] == "model":
                model = words[1]
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        if len(cols) != 5:
            raise TraceFormatError(f"expected 5 columns, found {len(cols)}", n)
        try:
            cycle = int(cols[0])
        except ValueError:
            raise TraceFormatError(f"cycle index {cols[0]!r} is not an integer", n) from None
        none = lambda v: None if v == "-" else v  # noqa: E731
        events.append(TraceEvent(cycle, cols[1], none(cols[2]), none(cols[3]), cols[4]))
    return model, events


def completion_trace(events: Iterable, labels: Optional[set] = None,
                     workflow_instance: Optional[str] = None) -> list[str]:
    """Activities in the order their instances went from active to done.

    events are TraceEvents or StateChanges. labels restricts the result to
    those activities (the atomic ones, for comparison with a Petri net);
    workflow_instance keeps only StateChanges of that workflow instance.
    Events of one cycle keep their given order.
    """
    out = []
    for e in sorted(events, key=lambda e: e.cycle):
        if _short(e.new) != "done" or _short(e.old) != "active" or e.activity is None:
            continue
        if labels is not None and e.activity not in labels:
            continue
        if workflow_instance is not None and \
                getattr(e, "workflow_instance", None) != workflow_instance:
            continue
        out.append(e.activity)
    return out


def events_from_reports(reports) -> list[TraceEvent]:
    return [TraceEvent.from_change(c) for r in reports for c in r.transitions]
