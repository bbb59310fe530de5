"""A minimal Linked Data Platform server: basic containers and RDF sources.

The server is transport-free: ``handle`` takes a method, a target IRI and
an optional payload and returns a status, a graph and headers. The FastAPI
app in ``wildflow.service`` puts it on the wire; the runtime's in-process
accessor calls it directly.
"""
from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .rdf import IRI, LDP, RDF_TYPE, WILD, Graph, Term, Triple, rebase
from .rules import NULL_BASE
from .turtle import TurtleSyntaxError, parse_turtle

LDP_CONTAINS = IRI(LDP + "contains")
LDP_BASIC_CONTAINER = IRI(LDP + "BasicContainer")
LDP_CONTAINER = IRI(LDP + "Container")
LDP_RESOURCE = IRI(LDP + "Resource")
LDP_RDF_SOURCE = IRI(LDP + "RDFSource")
HAS_STATE = IRI(WILD + "hasState")


@dataclass
class Response:
    status: int
    graph: Optional[Graph] = None
    headers: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300

    @property
    def location(self) -> Optional[str]:
        return self.headers.get("Location")


@dataclass(frozen=True)
class Transition:
    subject: str
    old: Optional[str]
    new: Optional[str]


@dataclass(frozen=True)
class LogEntry:
    seq: int
    time: float
    method: str
    target: str
    status: int
    transitions: tuple = ()


@dataclass
class Resource:
    iri: str
    graph: Graph
    embeds: tuple = ()


@dataclass
class Container:
    iri: str
    graph: Graph
    members: dict = field(default_factory=dict)  # insertion-ordered set of IRIs
    counter: itertools.count = field(default_factory=lambda: itertools.count(1))


def _states(g: Graph, predicate: IRI) -> dict[Term, list[Term]]:
    out: dict[Term, list[Term]] = {}
    for t in g.triples(None, predicate, None):
        out.setdefault(t.subject, []).append(t.object)
    return out


def _name(term) -> Optional[str]:
    return None if term is None else getattr(term, "value", str(term))


class LDPServer:
    """In-memory LDP server rooted at base.

    Every request is logged; writes record the hasState transitions they
    caused, which is what the state-machine audit reads. All updates go
    through one lock, so each request is atomic and the log order is a
    valid linearization.
    """

    def __init__(self, base: str, containers: Iterable[str] = ("instances/",),
                 state_predicate: IRI = HAS_STATE):
        if not base.endswith("/"):
            base += "/"
        self.base = base
        self.state_predicate = state_predicate
        self.resources: dict[str, Resource] = {}
        self.containers: dict[str, Container] = {}
        self.log: list[LogEntry] = []
        self._lock = threading.RLock()
        self._seq = itertools.count()
        for path in containers:
            self.add_container(path)

    # -- setup helpers (not logged)
    def iri(self, path: str) -> str:
        return path if path.startswith(("http://", "https://")) else self.base + path

    def add_container(self, path: str) -> str:
        iri = self.iri(path)
        if not iri.endswith("/"):
            iri += "/"
        g = Graph([Triple(IRI(iri), RDF_TYPE, LDP_BASIC_CONTAINER),
                   Triple(IRI(iri), RDF_TYPE, LDP_CONTAINER)])
        self.containers[iri] = Container(iri, g)
        return iri

    def load(self, path: str, graph: Union[Graph, str], embeds: Iterable[str] = ()) -> str:
        """Store a resource directly, adding it to its container if it has one."""
        iri = self.iri(path)
        if isinstance(graph, str):
            graph = parse_turtle(graph, base=iri)
        with self._lock:
            self.resources[iri] = Resource(iri, graph.copy(), tuple(self.iri(e) for e in embeds))
            parent = self.container_of(iri)
            if parent is not None:
                parent.members[iri] = None
        return iri

    def container_of(self, iri: str) -> Optional[Container]:
        for c_iri, container in self.containers.items():
            rest = iri[len(c_iri):]
            if iri.startswith(c_iri) and rest and "/" not in rest:
                return container
        return None

    def serves(self, iri: str) -> bool:
        return iri.startswith(self.base)

    def members(self, container: str) -> list[str]:
        return list(self.containers[self.iri(container)].members)

    # -- protocol
    def handle(self, method: str, target: str, payload: Union[Graph, str, None] = None,
               *, content_type: str = "text/turtle") -> Response:
        """Apply one HTTP request and log it.

        A string payload is parsed as Turtle with the created (POST) or
        replaced (PUT) resource as base. A Graph payload is taken to be
        written relative to NULL_BASE and is rebased the same way.
        """
        target = target.split("#", 1)[0]
        method = method.upper()
        with self._lock:
            if not self.serves(target):
                response, transitions = Response(404), ()
            else:
                response, transitions = self._dispatch(method, target, payload, content_type)
            self.log.append(LogEntry(next(self._seq), time.monotonic(), method, target,
                                     response.status, tuple(transitions)))
        return response

    def _dispatch(self, method, target, payload, content_type):
        handler = getattr(self, "_" + method.lower(), None)
        if handler is None:
            return Response(405, headers={"Allow": "GET, PUT, POST, DELETE"}), ()
        if method in ("PUT", "POST"):
            return handler(target, payload, content_type)
        return handler(target)

    def _representation(self, base: str, payload, content_type) -> Optional[Graph]:
        if payload is None:
            return Graph()
        if isinstance(payload, Graph):
            return rebase(payload, NULL_BASE, base)
        if content_type.split(";")[0].strip() not in ("text/turtle", "application/x-turtle", ""):
            return None
        try:
            return parse_turtle(payload, base=base)
        except TurtleSyntaxError:
            return None

    def _links(self, iri: str) -> dict:
        types = [LDP_RESOURCE.value]
        types += [LDP_BASIC_CONTAINER.value] if iri in self.containers else [LDP_RDF_SOURCE.value]
        return {"Link": ", ".join(f'<{t}>; rel="type"' for t in types),
                "Content-Type": "text/turtle"}

    def _get(self, target):
        if target in self.containers:
            c = self.containers[target]
            g = c.graph.copy()
            for m in c.members:
                g.add(Triple(IRI(target), LDP_CONTAINS, IRI(m)))
            return Response(200, g, self._links(target)), ()
        res = self.resources.get(target)
        if res is None:
            return Response(404), ()
        g = res.graph.copy()
        for e in res.embeds:
            if e in self.resources:
                g.add_all(self.resources[e].graph)
        return Response(200, g, self._links(target)), ()

    def _post(self, target, payload, content_type):
        c = self.containers.get(target)
        if c is None:
            status = 404 if target not in self.resources else 405
            return Response(status, headers={"Allow": "GET, PUT, DELETE"}), ()
        while True:
            iri = f"{target}{next(c.counter)}"
            if iri not in self.resources:
                break
        g = self._representation(iri, payload, content_type)
        if g is None:
            return Response(400), ()
        self.resources[iri] = Resource(iri, g)
        c.members[iri] = None
        transitions = self._transitions(Graph(), g)
        return Response(201, None, {"Location": iri, **self._links(iri)}), transitions

    def _put(self, target, payload, content_type):
        if target in self.containers:
            return Response(405, headers={"Allow": "GET, POST"}), ()
        g = self._representation(target, payload, content_type)
        if g is None:
            return Response(400), ()
        old = self.resources.get(target)
        transitions = self._transitions(old.graph if old else Graph(), g)
        if old is None:
            self.resources[target] = Resource(target, g)
            parent = self.container_of(target)
            if parent is not None:
                parent.members[target] = None
            return Response(201, None, {"Location": target}), transitions
        old.graph = g
        return Response(200), transitions

    def _delete(self, target):
        if target in self.containers:
            return Response(405, headers={"Allow": "GET, POST"}), ()
        old = self.resources.pop(target, None)
        if old is None:
            return Response(404), ()
        parent = self.container_of(target)
        if parent is not None:
            parent.members.pop(target, None)
        return Response(204), self._transitions(old.graph, Graph())

    def _transitions(self, old: Graph, new: Graph) -> list[Transition]:
        before = _states(old, self.state_predicate)
        after = _states(new, self.state_predicate)
        out = []
        for s in sorted(set(before) | set(after), key=lambda t: t.sort_key()):
            b, a = before.get(s, []), after.get(s, [])
            if set(b) == set(a):
                continue
            if len(b) > 1 or len(a) > 1:
                out.append(Transition(_name(s), "|".join(sorted(map(_name, b))) or None,
                                      "|".join(sorted(map(_name, a))) or None))
            else:
                out.append(Transition(_name(s), _name(b[0] if b else None),
                                      _name(a[0] if a else None)))
        return out

    def patch_state(self, target: str, new_state: Union[IRI, str]) -> Response:
        """Replace the single hasState triple of target, keeping everything else."""
        if isinstance(new_state, str):
            new_state = IRI(new_state)
        doc = target.split("#", 1)[0]
        with self._lock:
            res = self.resources.get(doc)
            if res is None:
                response, transitions = Response(404), ()
            else:
                current = list(res.graph.triples(None, self.state_predicate, None))
                if len(current) > 1:
                    response, transitions = Response(409), ()
                else:
                    subject = current[0].subject if current else IRI(target)
                    g = res.graph.copy()
                    for t in current:
                        g.discard(t)
                    g.add(Triple(subject, self.state_predicate, new_state))
                    transitions = self._transitions(res.graph, g)
                    res.graph = g
                    response = Response(200)
            self.log.append(LogEntry(next(self._seq), time.monotonic(), "PATCH", doc,
                                     response.status, tuple(transitions)))
        return response

    def requests(self, method: Optional[str] = None) -> list[LogEntry]:
        with self._lock:
            return [e for e in self.log if method is None or e.method == method]


# Fig. 3: uninitialised -> initialised -> active -> done
STATE_ORDER = {WILD + "uninitialised": 0, WILD + "initialised": 1,
               WILD + "active": 2, WILD + "done": 3}
ALLOWED_EDGES = {(WILD + "uninitialised", WILD + "initialised"),
                 (WILD + "initialised", WILD + "active"),
                 (WILD + "active", WILD + "done")}
CREATION_STATES = {WILD + "uninitialised", WILD + "initialised", WILD + "active"}


def audit_transitions(log: Iterable[LogEntry]) -> list[str]:
    """Return one message per hasState change outside the instance state machine."""
    violations = []
    for entry in log:
        if not 200 <= entry.status < 300:
            continue
        for tr in entry.transitions:
            if tr.old is None and tr.new in CREATION_STATES:
                continue
            if tr.old is not None and tr.new is None and entry.method == "DELETE":
                continue
            if (tr.old, tr.new) not in ALLOWED_EDGES:
                violations.append(f"#{entry.seq} {entry.method} {entry.target}: "
                                  f"{tr.subject} {tr.old} -> {tr.new}")
    return violations
