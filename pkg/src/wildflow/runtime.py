"""The polling interpreter: empty memory, assert, GET and derive to a fixpoint, write.

Each cycle starts from nothing but the program's initial assertions. Phase
three alternates between issuing the GET requests the rules ask for and
saturating the derivation rules until neither produces anything new; only
then are the remaining request rules instantiated and dispatched.
"""
from __future__ import annotations

import logging
import random
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, Sequence

from .ldp import HAS_STATE, LDPServer, Response
from .rdf import IRI, WILD, Graph, Triple, rebase, rename_blanks
from .rules import NULL_BASE, HttpRequest, Hook, Program, Saturator, fire_request_rules
from .turtle import TurtleSyntaxError, parse_turtle, serialize_turtle

__all__ = [
    "HttpRequest", "Accessor", "LocalAccessor", "HttpxAccessor", "TransportError",
    "CycleReport", "StateChange", "Engine", "LoopTimeout",
]

log = logging.getLogger(__name__)

ACTIVITY_INSTANCE_OF = IRI(WILD + "activityInstanceOf")
WORKFLOW_INSTANCE_OF = IRI(WILD + "workflowInstanceOf")
IN_WORKFLOW_INSTANCE = IRI(WILD + "inWorkflowInstance")


class TransportError(ConnectionError):
    """The target could not be reached at all."""


class Accessor(Protocol):
    def __call__(self, method: str, target: str, payload: Optional[Graph] = None) -> Response:
        ...


class _Counting:
    def __init__(self):
        self.counts: Counter = Counter()
        self.history: list[tuple[str, str, int]] = []
        self._lock = threading.Lock()

    def _record(self, method, target, status):
        with self._lock:
            self.counts[method] += 1
            self.history.append((method, target, status))

    @property
    def total(self) -> int:
        return sum(self.counts.values())


class LocalAccessor(_Counting):
    """Calls LDPServer objects in-process, routing by base IRI."""

    def __init__(self, servers: Iterable[LDPServer], latency: float = 0.0):
        super().__init__()
        self.servers = sorted(servers, key=lambda s: len(s.base), reverse=True)
        self.latency = latency

    def add(self, server: LDPServer) -> None:
        self.servers = sorted([*self.servers, server], key=lambda s: len(s.base), reverse=True)

    def __call__(self, method, target, payload=None) -> Response:
        if self.latency:
            time.sleep(self.latency)
        server = next((s for s in self.servers if s.serves(target)), None)
        if server is None:
            self._record(method, target, 0)
            raise TransportError(f"no server for {target}")
        response = server.handle(method, target, payload)
        if response.graph is not None and response.graph.blank_nodes():
            response.graph = rename_blanks(response.graph)
        self._record(method, target, response.status)
        return response


class HttpxAccessor(_Counting):
    """Speaks HTTP/1.1 with text/turtle bodies through an httpx client."""

    def __init__(self, client, timeout: float = 10.0):
        super().__init__()
        self.client = client
        self.timeout = timeout

    def __call__(self, method, target, payload=None) -> Response:
        import httpx

        headers = {"Accept": "text/turtle"}
        content = None
        if method in ("PUT", "POST"):
            headers["Content-Type"] = "text/turtle"
            content = serialize_turtle(payload or Graph(), base=NULL_BASE).encode()
        try:
            r = self.client.request(method, target, headers=headers, content=content,
                                    timeout=self.timeout)
        except httpx.HTTPError as exc:
            self._record(method, target, 0)
            raise TransportError(f"{method} {target}: {exc}") from exc
        self._record(method, target, r.status_code)
        out = Response(r.status_code, headers=dict(r.headers))
        if "location" in r.headers:
            out.headers["Location"] = r.headers["location"]
        if method == "GET" and r.is_success:
            out.graph = parse_turtle(r.text, base=target)
        return out


@dataclass(frozen=True)
class StateChange:
    cycle: int
    instance: str
    activity: Optional[str]
    old: Optional[str]
    new: str
    workflow_instance: Optional[str] = None


@dataclass
class CycleReport:
    cycle: int
    gets: int = 0
    derived: int = 0
    writes: int = 0
    wall_time: float = 0.0
    failed_gets: int = 0
    failed_writes: int = 0
    requests: list = field(default_factory=list)
    transitions: list = field(default_factory=list)
    memory_size: int = 0


class LoopTimeout(TimeoutError):
    def __init__(self, message: str, reports: list):
        super().__init__(message)
        self.reports = reports


class Engine:
    """Runs a Program against Read-Write Linked Data through an accessor.

    hooks are extra monotone derivation procedures (graph -> triples) run
    inside the phase-three fixpoint. ``patch_puts`` turns PUTs that carry a
    hasState triple into ceteris-paribus patches of the representation
    retrieved earlier in the same cycle. ``shuffle`` randomises the
    dispatch order of writes, which must never change the outcome.
    """

    def __init__(self, program: Program, http: Accessor, hooks: Sequence[Hook] = (), *,
                 max_workers: int = 1, shuffle: Optional[random.Random] = None,
                 patch_puts: bool = True, state_predicate: IRI = HAS_STATE):
        self.program = program
        self.http = http
        self.hooks = list(hooks)
        self.max_workers = max_workers
        self.shuffle = shuffle
        self.patch_puts = patch_puts
        self.state_predicate = state_predicate
        self.cycles = 0

    # -- phase 3
    def _get(self, target: str) -> tuple[str, Graph, bool]:
        try:
            r = self.http("GET", target)
        except (TransportError, TurtleSyntaxError) as exc:
            log.warning("GET %s failed: %s", target, exc)
            return target, Graph(), False
        if not r.ok or r.graph is None:
            log.warning("GET %s answered %s", target, r.status)
            return target, Graph(), False
        return target, r.graph, True

    def _fetch(self, targets: list[str]) -> list[tuple[str, Graph, bool]]:
        if self.max_workers > 1 and len(targets) > 1:
            with ThreadPoolExecutor(self.max_workers) as pool:
                return list(pool.map(self._get, targets))
        return [self._get(t) for t in targets]

    def evaluate(self) -> tuple[Graph, dict, int, int, int]:
        """Phases 1-3: returns memory, retrieved graphs, GET count, failures, derived count."""
        wm = self.program.assertions.copy()
        sat = Saturator(wm, self.program.derivations, self.hooks)
        sat.add()
        fetched: dict[str, Graph] = {}
        failures = 0
        while True:
            wanted = {r.target.value for r in
                      fire_request_rules(wm, self.program.requests, "GET")}
            wanted -= fetched.keys()
            if not wanted:
                break
            incoming: list[Triple] = []
            # responses enter the memory through this single merge point
            for target, g, ok in self._fetch(sorted(wanted)):
                fetched[target] = g
                failures += not ok
                incoming.extend(g)
            sat.add(incoming)
        return wm, fetched, len(fetched), failures, sat.derived

    # -- phase 4
    def _realize(self, req: HttpRequest, fetched: dict) -> Graph:
        payload = req.graph()
        if req.method != "PUT" or not self.patch_puts:
            return payload
        stored = fetched.get(req.target.value)
        patched = {t.subject for t in payload if t.predicate == self.state_predicate}
        if stored is None or not patched:
            return payload
        out = Graph(t for t in stored
                    if not (t.predicate == self.state_predicate and t.subject in patched))
        out.add_all(payload)
        return out

    def _changes(self, cycle, req, response, wm, fetched) -> list[StateChange]:
        payload = req.graph()
        if req.method == "POST" and response.location:
            payload = rebase(payload, NULL_BASE, response.location)
        stored = fetched.get(req.target.value, Graph())
        out = []
        for t in payload.triples(None, self.state_predicate, None):
            if not isinstance(t.object, IRI):
                continue
            old = stored.value(t.subject, self.state_predicate) if req.method == "PUT" else None
            if old == t.object:
                continue
            facts = payload if req.method == "POST" else wm
            activity = (facts.value(t.subject, ACTIVITY_INSTANCE_OF)
                        or facts.value(t.subject, WORKFLOW_INSTANCE_OF))
            wfi = facts.value(t.subject, IN_WORKFLOW_INSTANCE)
            out.append(StateChange(cycle, t.subject.value,
                                   activity.value if activity is not None else None,
                                   old.value if isinstance(old, IRI) else None,
                                   t.object.value,
                                   wfi.value if wfi is not None else t.subject.value))
        return out

    def run_cycle(self, index: Optional[int] = None) -> CycleReport:
        index = self.cycles if index is None else index
        self.cycles = index + 1
        start = time.perf_counter()
        wm, fetched, gets, failed_gets, derived = self.evaluate()
        writes = sorted(fire_request_rules(wm, self.program.requests, "non-GET"),
                        key=lambda r: (r.method, r.target.value, sorted(t.sort_key() for t in r.payload)))
        if self.shuffle is not None:
            self.shuffle.shuffle(writes)
        report = CycleReport(index, gets=gets, derived=derived, failed_gets=failed_gets,
                             memory_size=len(wm))
        for req in writes:
            try:
                response = self.http(req.method, req.target.value, self._realize(req, fetched))
            except TransportError as exc:
                log.warning("%s failed: %s", req, exc)
                report.failed_writes += 1
                continue
            report.writes += 1
            report.requests.append((req, response.status))
            if not response.ok:
                log.warning("%s answered %s", req, response.status)
                report.failed_writes += 1
                continue
            report.transitions.extend(self._changes(index, req, response, wm, fetched))
        report.transitions.sort(key=lambda c: (c.instance, c.new))
        report.wall_time = time.perf_counter() - start
        return report

    def run_loop(self, interval: float, stop: Callable[[CycleReport], bool],
                 timeout: Optional[float] = None, max_cycles: Optional[int] = None,
                 sleep: Callable[[float], None] = time.sleep) -> list[CycleReport]:
        """Run cycles every interval seconds until stop(report) holds.

        Raises LoopTimeout (carrying the reports so far) when timeout
        seconds or max_cycles cycles pass first.
        """
        if not interval > 0:
            raise ValueError("polling interval must be positive")
        reports: list[CycleReport] = []
        began = time.monotonic()
        while True:
            start = time.monotonic()
            report = self.run_cycle()
            reports.append(report)
            if stop(report):
                return reports
            if max_cycles is not None and len(reports) >= max_cycles:
                raise LoopTimeout(f"stop condition not met after {len(reports)} cycles", reports)
            if timeout is not None and time.monotonic() - began > timeout:
                raise LoopTimeout(f"stop condition not met after {timeout} s", reports)
            remaining = interval - (time.monotonic() - start)
            if remaining > 0:
                sleep(remaining)


def until_state(instance: str, state: IRI) -> Callable[[CycleReport], bool]:
    """Stop predicate: true once a cycle moved instance into state."""
    def stop(report: CycleReport) -> bool:
        return any(c.instance == instance and c.new == state.value for c in report.transitions)
    return stop
