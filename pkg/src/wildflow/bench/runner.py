"""Benchmark driver: inject instances, poll until all are done, count requests."""
from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..ldp import audit_transitions
from ..rdf import IRI
from ..runtime import Engine, LocalAccessor
from ..wild import vocab as W
from ..wild.model import new_instance
from ..wild.program import HOOKS, rule_program
from .building import INVERSES, Building, BuildingSpec, generate
from .workloads import NAMES, model_iri, publish


class BenchTimeout(TimeoutError):
    def __init__(self, message: str, report: "BenchReport"):
        super().__init__(message)
        self.report = report


@dataclass
class BenchReport:
    workload: str
    buildings: int
    wall_time: float = 0.0
    cycles: int = 0
    instances: int = 0
    completed: int = 0
    requests: Counter = field(default_factory=Counter)  # method -> count
    request_log: list = field(default_factory=list)  # (method, target) in issue order
    violations: list = field(default_factory=list)
    device_states: dict = field(default_factory=dict)

    @property
    def total_requests(self) -> int:
        return sum(self.requests.values())

    def request_multiset(self) -> Counter:
        return Counter(self.request_log)


def _engine(buildings: Sequence[Building], mode: str, fired_marker: bool,
            latency: float) -> tuple[Engine, LocalAccessor]:
    http = LocalAccessor([b.server for b in buildings], latency=latency)
    seeds = [s for b in buildings for s in b.seeds]
    program = rule_program(mode, seeds, fired_marker=fired_marker, extra_assertions=INVERSES)
    return Engine(program, http, HOOKS), http


def run_bench(spec: BuildingSpec, workload: str, interval: float = 0.2, warmup: float = 0.0,
              timeout: float = 300.0, mode: str = "execute", fired_marker: bool = False,
              latency: float = 0.0, poll: float = 0.0,
              buildings: Optional[list] = None) -> BenchReport:
    """Run workload on spec.buildings buildings with one engine.

    One workflow instance per building is POSTed, the first after warmup
    seconds and the rest every interval seconds; the engine polls back to
    back (or every poll seconds) until every instance is done. Wall time
    runs from the first injection to the cycle that finished the last one.
    """
    if workload not in NAMES:
        raise ValueError(f"unknown workload {workload!r}")
    if interval < 0 or warmup < 0:
        raise ValueError("interval and warmup must be non-negative")
    buildings = generate(spec) if buildings is None else buildings
    for b in buildings:
        publish(workload, b)
    engine, http = _engine(buildings, mode, fired_marker, latency)
    report = BenchReport(workload, len(buildings), instances=len(buildings))

    start = time.monotonic()
    pending = list(enumerate(buildings))
    instances: dict[str, Building] = {}
    first = None
    while True:
        now = time.monotonic()
        while pending and now - start >= warmup + pending[0][0] * interval:
            _, b = pending.pop(0)
            r = http("POST", b.instances, new_instance(IRI(model_iri(workload, b))))
            instances[r.location] = b
            first = time.monotonic() if first is None else first
        if first is not None:
            cycle = engine.run_cycle()
            report.cycles += 1
            for c in cycle.transitions:
                if c.instance in instances and c.new == W.done.value:
                    report.completed += 1
            if not pending and report.completed == len(buildings):
                break
            if time.monotonic() - first > timeout:
                report.wall_time = time.monotonic() - first
                raise BenchTimeout(f"{workload}: {report.completed}/{len(buildings)} instances "
                                   f"done after {timeout} s", report)
        if poll > 0:
            time.sleep(poll)
        elif first is None:
            time.sleep(min(0.01, max(0.0, warmup + (pending[0][0] * interval) - (now - start))))
    report.wall_time = time.monotonic() - first
    report.requests = Counter(m for m, _, _ in http.history)
    report.request_log = [(m, t) for m, t, _ in http.history]
    report.violations = [v for b in buildings for v in audit_transitions(b.server.log)]
    report.device_states = {b.index: b.device_states() for b in buildings}
    return report


def affine_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through (xs, ys): returns slope, intercept, R²."""
    import numpy as np

    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(((y - (slope * x + intercept)) ** 2).sum())
    total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if total == 0 else 1.0 - residual / total
    return float(slope), float(intercept), r2


def sweep(scales: Iterable[int], names: Iterable[str] = NAMES, repeat: int = 1,
          **kwargs) -> dict[tuple[str, int], BenchReport]:
    """run_bench over every (workload, scale); wall time is the minimum over repeat runs."""
    out = {}
    base = kwargs.pop("spec", BuildingSpec())
    for name in names:
        for n in scales:
            best = None
            for _ in range(repeat):
                spec = BuildingSpec(n, base.rooms, base.lights, base.switches, base.base, base.hour)
                r = run_bench(spec, name, **kwargs)
                if best is None or r.wall_time < best.wall_time:
                    best = r
            out[(name, n)] = best
    return out


def format_table(results: dict, sep: str = "\t") -> str:
    """Rows per building count, one wall-time and one request-count column per workload."""
    names = sorted({k[0] for k in results})
    scales = sorted({k[1] for k in results})
    header = ["buildings"] + [f"{n} [s]" for n in names] + [f"{n} requests" for n in names]
    lines = [sep.join(header)]
    for s in scales:
        row = [str(s)]
        row += [f"{results[(n, s)].wall_time:.3f}" if (n, s) in results else "" for n in names]
        row += [str(results[(n, s)].total_requests) if (n, s) in results else "" for n in names]
        lines.append(sep.join(row))
    return "\n".join(lines) + "\n"
