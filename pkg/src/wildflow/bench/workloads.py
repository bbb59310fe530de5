"""Five workflow shapes W1 to W5 over a generated building.

The shapes grow strictly in activity count (2, 4, 6, 8, 13) and together
cover sequence, parallel split and synchronisation, exclusive choice and
simple merge. Activities are either checks (a postcondition on static or
clock data) or effects (PUT a light's state to "on", then check it).
Conditional branches are chosen by a switch that the workflows never
touch: "off" selects the first branch, "on" the second, so the
preconditions are mutually exclusive and the outcome is repeatable.
"""
from __future__ import annotations

import itertools
from typing import Callable, Optional

from ..rdf import IRI
from ..wild.model import RequestDescription, Spec, WorkflowModel, atomic, cond, model_graph, \
    par, read_model, seq
from .building import Building, BuildingSpec, generate

NAMES = ("W1", "W2", "W3", "W4", "W5")
SIZES = {"W1": 2, "W2": 4, "W3": 6, "W4": 8, "W5": 13}


class _Maker:
    """Hands out numbered check and effect activities for one building."""

    def __init__(self, b: Building):
        self.b = b
        self.names = (f"a{i}" for i in itertools.count(1))
        self.light = itertools.cycle(self.b.lights)
        self.checks = itertools.count()

    def check(self, pre: Optional[str] = None) -> Spec:
        b = self.b
        if next(self.checks) % 2 == 0:
            query = f"ASK {{ <{b.clock}> sosa:hasSimpleResult ?hour }}"
        else:
            room, light = b.lights[0]
            query = f"ASK {{ <{room}> brick:isLocationOf <{light}> }}"
        return atomic(next(self.names), post=query, pre=pre)

    def effect(self, pre: Optional[str] = None) -> Spec:
        _, light = next(self.light)
        state = self.b.state(light)
        body = '@prefix ssn: <http://www.w3.org/ns/ssn/> .\n<> ssn:hasValue "on" .'
        return atomic(next(self.names), pre=pre,
                      post=f'ASK {{ <{state}> ssn:hasValue "on" }}',
                      request=RequestDescription("PUT", IRI(state), body))

    def switch(self, value: str) -> str:
        _, switch = self.b.switches[0] if self.b.switches else self.b.lights[-1]
        return f'ASK {{ <{self.b.state(switch)}> ssn:hasValue "{value}" }}'


def _shapes(m: _Maker) -> dict[str, Callable[[], Spec]]:
    off, on = m.switch("off"), m.switch("on")
    return {
        "W1": lambda: seq(m.check(), m.effect()),
        "W2": lambda: seq(m.check(), cond(m.effect(pre=off), m.effect(pre=on)), m.effect()),
        "W3": lambda: seq(m.check(), par(m.effect(), m.effect(), m.check()), m.effect(),
                          m.check()),
        "W4": lambda: seq(par(m.effect(), cond(m.effect(pre=off), m.check(pre=on))),
                          par(m.check(), cond(m.effect(pre=off), m.effect(pre=on))),
                          m.effect(), m.check()),
        "W5": lambda: seq(m.check(),
                          par(seq(m.effect(), m.check()),
                              cond(m.effect(pre=off), seq(m.effect(), m.check(), pre=on)),
                              m.effect()),
                          cond(par(m.effect(), m.check(), pre=off), m.effect(pre=on)),
                          seq(m.effect(), m.check()),
                          m.check()),
    }


def workload_spec(name: str, building: Building) -> Spec:
    if name not in NAMES:
        raise ValueError(f"unknown workload {name!r}; expected one of {', '.join(NAMES)}")
    return _shapes(_Maker(building))[name]()


def model_iri(name: str, building: Building) -> str:
    return f"{building.models}{name}#wfm"


def publish(name: str, building: Building) -> WorkflowModel:
    """Describe workload name for building and store it in the building's models container."""
    doc = building.models + name
    g, _ = model_graph(workload_spec(name, building), doc)
    building.server.load(doc, g)
    return read_model(g)


def workloads(building: Optional[Building] = None) -> dict[str, WorkflowModel]:
    """W1 to W5 as WorkflowModels (over a one-building default world if none is given)."""
    if building is None:
        building = generate(BuildingSpec())[0]
    out = {}
    for name in NAMES:
        g, _ = model_graph(workload_spec(name, building), building.models + name)
        out[name] = read_model(g)
    return out
