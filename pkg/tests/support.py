"""Shared test fixtures: a world of lamps and switches, and a one-call model runner."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from wildflow.ldp import LDPServer
from wildflow.rdf import IRI
from wildflow.runtime import Engine, LocalAccessor, LoopTimeout, until_state
from wildflow.trace import completion_trace
from wildflow.wild import vocab as W
from wildflow.wild.model import RequestDescription, Spec, atomic, cond, model_graph, \
    new_instance, par, read_model, seq
from wildflow.wild.program import HOOKS, rule_program

WORLD = "http://world.example/"
WF = "http://wf.example/"
ON_BODY = '@prefix ssn: <http://www.w3.org/ns/ssn/> .\n<> ssn:hasValue "on" .'


def lamp(name: str) -> str:
    return f"{WORLD}devices/{name}"


def switch(name: str) -> str:
    return f"{WORLD}switches/{name}"


def make_world(lamps=(), switches: Optional[dict] = None) -> LDPServer:
    world = LDPServer(WORLD, containers=("devices/", "switches/"))
    for n in lamps:
        world.load(f"devices/{n}", '@prefix ssn: <http://www.w3.org/ns/ssn/> . <> ssn:hasValue "off" .')
    for n, value in (switches or {}).items():
        world.load(f"switches/{n}",
                   f'@prefix ssn: <http://www.w3.org/ns/ssn/> . <> ssn:hasValue "{value}" .')
    return world


def act(name: str, pre: Optional[str] = None, request: bool = True) -> Spec:
    """Atomic activity that turns lamp ``name`` on and is done once it reads on."""
    target = lamp(name)
    req = RequestDescription("PUT", IRI(target), ON_BODY) if request else None
    return atomic(name, post=f'ASK {{ <{target}> ssn:hasValue "on" }}', request=req, pre=pre)


def when(switch_name: str, value: str) -> str:
    return f'ASK {{ <{switch(switch_name)}> ssn:hasValue "{value}" }}'


def leaves(spec: Spec) -> list[str]:
    if spec.kind == "atomic":
        return [spec.name]
    return [n for c in spec.children for n in leaves(c)]


def switches_of(spec: Spec, out: Optional[dict] = None) -> dict:
    """Every switch a precondition mentions, set to "on"."""
    out = {} if out is None else out
    for c in spec.children:
        if c.pre and "switches/" in c.pre:
            out[c.pre.split("switches/")[1].split(">")[0]] = "on"
        switches_of(c, out)
    return out


@dataclass
class Run:
    model: object
    instance: str
    reports: list
    world: LDPServer
    wf: LDPServer
    http: LocalAccessor
    timed_out: bool = False
    transitions: list = field(default_factory=list)

    @property
    def cycles(self) -> int:
        return len(self.reports)

    def trace(self) -> list[str]:
        labels = {n.iri.value for n in self.model.root.atomic()}
        return [a.rsplit("#", 1)[-1] for a in
                completion_trace(self.transitions, labels, self.instance)]

    @property
    def done(self) -> bool:
        return any(c.instance == self.instance and c.new == W.done.value for c in self.transitions)


def run_model(root: Spec, mode: str = "execute", switches: Optional[dict] = None,
              max_cycles: int = 60, fired_marker: bool = False, terminate_lists: bool = True,
              world: Optional[LDPServer] = None, shuffle: Optional[random.Random] = None,
              seeds=None, interval: float = 1e-9, sleep=lambda s: None) -> Run:
    world = world or make_world(leaves(root), switches_of(root) | (switches or {}))
    wf = LDPServer(WF, containers=("instances/", "models/"))
    g, model_iri = model_graph(root, WF + "models/m", terminate_lists=terminate_lists)
    wf.load("models/m", g)
    http = LocalAccessor([world, wf])
    instance = http("POST", WF + "instances/", new_instance(model_iri)).location
    seeds = [WF + "instances/", WORLD + "devices/", WORLD + "switches/"] if seeds is None else seeds
    program = rule_program(mode, seeds, fired_marker=fired_marker)
    engine = Engine(program, http, HOOKS, shuffle=shuffle)
    timed_out = False
    try:
        reports = engine.run_loop(interval, until_state(instance, W.done), max_cycles=max_cycles,
                                  sleep=sleep)
    except LoopTimeout as exc:
        reports, timed_out = exc.reports, True
    model = read_model(g, model_iri) if terminate_lists else None
    return Run(model, instance, reports, world, wf, http, timed_out,
               [c for r in reports for c in r.transitions])


# -- the five basic patterns
def patterns() -> dict[str, Spec]:
    return {
        "WFP1 sequence": seq(act("A"), act("B"), act("C")),
        "WFP2 parallel split": par(act("A"), act("B"), act("C")),
        "WFP3 synchronisation": seq(par(act("A"), act("B")), act("C")),
        "WFP4 exclusive choice": cond(act("A", pre=when("s", "off")), act("B", pre=when("s", "on"))),
        "WFP5 simple merge": seq(cond(act("A", pre=when("s", "on")), act("B", pre=when("s", "off"))),
                                 act("C")),
    }


def random_tree(rng: random.Random, max_activities: int = 6) -> Spec:
    """A random activity tree with at most max_activities leaves.

    Conditional children get mutually exclusive preconditions on a switch
    of their own, with exactly one branch enabled.
    """
    names = iter(f"L{i}" for i in range(max_activities))
    budget = [rng.randint(1, max_activities)]
    counter = iter(range(1000))

    def build(limit: int) -> Spec:
        if limit <= 1 or rng.random() < 0.3:
            budget[0] -= 1
            return act(next(names))
        kind = rng.choice(["sequential", "parallel", "conditional"])
        n = rng.randint(2, min(3, limit))
        sizes = _split(rng, limit, n)
        children = [build(s) for s in sizes]
        if kind == "sequential":
            return seq(*children)
        if kind == "parallel":
            return par(*children)
        sw = f"s{next(counter)}"
        chosen = rng.randrange(n)
        guarded = [Spec(c.kind, c.name, c.children, c.post, when(sw, "on" if i == chosen else "off"),
                        c.request) for i, c in enumerate(children)]
        return cond(*guarded)

    return build(budget[0])


def _split(rng: random.Random, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.sample(range(1, total), parts - 1)) if total > parts else list(range(1, parts))
    bounds = [0, *cuts, max(total, parts)]
    return [max(1, b - a) for a, b in zip(bounds, bounds[1:])]
