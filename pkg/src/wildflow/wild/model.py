"""Reading, validating and building tree-structured workflow models."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from ..query import AskQuery, UnsupportedQuery, parse_ask
from ..rdf import (
    DEFAULT_PREFIXES, HTTPM, IRI, RDF_TYPE, Graph, ListError, ListNotTerminated, Literal, Term, Triple,
    RDF_NIL, RDF_REST, make_list, read_list,
)
from ..rules import NULL_BASE
from ..turtle import TurtleSyntaxError
from . import vocab as W


@lru_cache(maxsize=4096)
def parse_condition(text: str, base: Optional[str]) -> AskQuery:
    return parse_ask(text, base, DEFAULT_PREFIXES)


def _document(term: Term) -> Optional[str]:
    return term.value.split("#", 1)[0] if isinstance(term, IRI) else None


def condition_query(g: Graph, condition: Term, owner: Optional[Term] = None) -> Optional[AskQuery]:
    """The ASK query a condition resource carries in sp:text, if it parses.

    Relative IRIs in the query resolve against the condition's document,
    or the owning activity's when the condition is a blank node.
    """
    text = g.value(condition, W.sp_text)
    if not isinstance(text, Literal):
        return None
    return parse_condition(text.lexical, _document(condition) or _document(owner))


@dataclass(frozen=True)
class RequestDescription:
    method: str
    target: IRI
    body: Optional[str] = None


@dataclass
class ActivityNode:
    iri: Term
    kind: str
    children: list = field(default_factory=list)
    postcondition: Optional[Term] = None
    precondition: Optional[Term] = None
    request: Optional[RequestDescription] = None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def atomic(self) -> list["ActivityNode"]:
        return [n for n in self.walk() if n.kind == "atomic"]


@dataclass
class WorkflowModel:
    iri: Term
    root: ActivityNode

    def activities(self) -> list[ActivityNode]:
        return list(self.root.walk())


@dataclass
class ValidationReport:
    model: Optional[Term]
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        lines = [f"model {self.model}: {'valid' if self.ok else 'INVALID'}"]
        lines += [f"  violation: {v}" for v in self.violations]
        lines += [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)


class InvalidModel(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


def find_models(g: Graph) -> list[Term]:
    return sorted(g.subjects(RDF_TYPE, W.WorkflowModel), key=lambda t: t.sort_key())


def _kind(g: Graph, node: Term) -> list[str]:
    return [W.KINDS[t] for t in g.objects(node, RDF_TYPE) if t in W.KINDS]


def _request(g: Graph, node: Term, problems: list) -> Optional[RequestDescription]:
    h = g.value(node, W.hasHttpRequest)
    if h is None:
        if g.objects(node, W.hasHttpRequest):
            problems.append(f"{node} has several HTTP requests")
        return None
    method = g.value(h, W.http_mthd)
    target = g.value(h, W.http_requestURI)
    body = g.value(h, W.http_body)
    if not (isinstance(method, IRI) and method.value.startswith(HTTPM)) or not isinstance(target, IRI):
        problems.append(f"request of {node} needs an httpm: method and an IRI requestURI")
        return None
    name = method.value[len(HTTPM):]
    if name in ("PUT", "POST") and not isinstance(body, Literal):
        problems.append(f"{name} request of {node} needs a Turtle http:body literal")
        return None
    return RequestDescription(name, target, body.lexical if isinstance(body, Literal) else None)


def _condition(g: Graph, node: Term, prop: IRI, problems: list) -> Optional[Term]:
    values = g.objects(node, prop)
    if not values:
        return None
    if len(values) > 1:
        problems.append(f"{node} has several {prop.value.rsplit('#', 1)[-1]} conditions")
    cond = values[0]
    if isinstance(cond, Literal):
        problems.append(f"condition of {node} must be a resource carrying sp:text")
        return None
    try:
        if condition_query(g, cond, node) is None:
            problems.append(f"condition {cond} of {node} has no sp:text query")
    except (TurtleSyntaxError, UnsupportedQuery) as exc:
        problems.append(f"condition {cond} of {node} does not parse: {exc}")
    return cond


def validate_model(g: Graph, model: Optional[Term] = None) -> ValidationReport:
    """Check that model describes a well-formed activity tree.

    Violations: missing or multiple behaviours, a node that is not exactly
    one activity kind, child lists that are missing, empty, malformed or
    not rdf:nil-terminated, shared children and cycles, conditional children
    without precondition, unparseable conditions. Warnings cover what the
    engine cannot check, such as mutually exclusive preconditions.
    """
    if model is None:
        models = find_models(g)
        if len(models) != 1:
            report = ValidationReport(None)
            report.violations.append(
                "no hasBehaviour: graph has no workflow model" if not models
                else f"{len(models)} workflow models; name one")
            return report
        model = models[0]
    report = ValidationReport(model)
    roots = g.objects(model, W.hasBehaviour)
    if len(roots) != 1:
        report.violations.append(f"{model} has {len(roots)} hasBehaviour roots, expected one")
        return report
    parents: dict[Term, Term] = {}
    stack = [(roots[0], None)]
    while stack:
        node, parent = stack.pop()
        if node in parents or node == roots[0] and parent is not None:
            report.violations.append(f"{node} occurs more than once in the tree (shared child or cycle)")
            continue
        parents[node] = parent
        kinds = _kind(g, node)
        if len(kinds) != 1:
            report.violations.append(f"{node} must have exactly one activity type, has {kinds or 'none'}")
            continue
        kind = kinds[0]
        lists = g.objects(node, W.hasChildActivities)
        if kind == "atomic":
            if lists:
                report.violations.append(f"atomic activity {node} has child activities")
            if g.value(node, W.hasPostcondition) is None:
                report.warnings.append(f"atomic activity {node} has no postcondition and never completes")
            _request(g, node, report.violations)
            _condition(g, node, W.hasPostcondition, report.violations)
        else:
            if len(lists) != 1:
                report.violations.append(f"composite activity {node} needs exactly one child list")
                continue
            try:
                children = read_list(lists[0], g)
            except ListNotTerminated as exc:
                report.violations.append(f"non-terminated list: children of {node}: {exc}")
                continue
            except ListError as exc:
                report.violations.append(f"malformed list: children of {node}: {exc}")
                continue
            if not children:
                report.violations.append(f"composite activity {node} has no children")
            if kind == "conditional":
                for child in children:
                    if g.value(child, W.hasPrecondition) is None:
                        report.violations.append(f"child {child} of conditional {node} has no precondition")
                report.warnings.append(
                    f"preconditions of the children of {node} must be mutually exclusive; "
                    f"this is the modeller's obligation")
            for child in reversed(children):
                stack.append((child, node))
        if kind != "atomic":
            _condition(g, node, W.hasPostcondition, report.violations)
        _condition(g, node, W.hasPrecondition, report.violations)
    return report


def read_model(g: Graph, model: Optional[Term] = None) -> WorkflowModel:
    """Validate and convert the RDF description into a WorkflowModel tree."""
    report = validate_model(g, model)
    if not report.ok:
        raise InvalidModel(report)
    model = report.model

    def build(node: Term) -> ActivityNode:
        kind = _kind(g, node)[0]
        children = []
        if kind != "atomic":
            children = [build(c) for c in read_list(g.value(node, W.hasChildActivities), g)]
        return ActivityNode(node, kind, children, g.value(node, W.hasPostcondition),
                            g.value(node, W.hasPrecondition), _request(g, node, []))

    return WorkflowModel(model, build(g.value(model, W.hasBehaviour)))


# -- building models in code -------------------------------------------------

@dataclass
class Spec:
    """A lightweight activity tree used to generate model descriptions."""
    kind: str
    name: str = ""
    children: Sequence["Spec"] = ()
    post: Optional[str] = None
    pre: Optional[str] = None
    request: Optional[RequestDescription] = None


def atomic(name: str, post: Optional[str] = None, request: Optional[RequestDescription] = None,
           pre: Optional[str] = None) -> Spec:
    return Spec("atomic", name, (), post, pre, request)


def seq(*children: Spec, name: str = "", pre: Optional[str] = None) -> Spec:
    return Spec("sequential", name, children, pre=pre)


def par(*children: Spec, name: str = "", pre: Optional[str] = None) -> Spec:
    return Spec("parallel", name, children, pre=pre)


def cond(*children: Spec, name: str = "", pre: Optional[str] = None) -> Spec:
    return Spec("conditional", name, children, pre=pre)


_CLASS = {v: k for k, v in W.KINDS.items()}


def model_graph(root: Spec, base: str, model_name: str = "wfm",
                terminate_lists: bool = True) -> tuple[Graph, IRI]:
    """Describe root as a workflow model document at base.

    Unnamed composites become ``<#root>`` (for the tree root) or
    ``<#c1>``, ``<#c2>``, ... With terminate_lists=False the last rdf:rest
    of every child list is left out, which makes the model invalid.
    """
    base = base.split("#", 1)[0]
    g = Graph(prefixes={"": W.NS, "sp": W.sp_text.value.rsplit("#", 1)[0] + "#"})
    model = IRI(f"{base}#{model_name}")
    g.add(Triple(model, RDF_TYPE, W.WorkflowModel))
    counter = itertools.count(1)

    def describe(spec: Spec, is_root: bool) -> IRI:
        name = spec.name or ("root" if is_root else f"c{next(counter)}")
        node = IRI(f"{base}#{name}")
        g.add(Triple(node, RDF_TYPE, _CLASS[spec.kind]))
        if spec.kind != "atomic":
            kids = [describe(c, False) for c in spec.children]
            g.add(Triple(node, W.hasChildActivities, make_list(kids, g)))
        for prop, text in ((W.hasPostcondition, spec.post), (W.hasPrecondition, spec.pre)):
            if text is not None:
                c = IRI(f"{node.value}-{'post' if prop == W.hasPostcondition else 'pre'}")
                g.add(Triple(node, prop, c))
                g.add(Triple(c, RDF_TYPE, W.sp_Ask))
                g.add(Triple(c, W.sp_text, Literal(text)))
        if spec.request is not None:
            r = spec.request
            h = IRI(f"{node.value}-request")
            g.add(Triple(node, W.hasHttpRequest, h))
            g.add(Triple(h, W.http_mthd, IRI(HTTPM + r.method)))
            g.add(Triple(h, W.http_requestURI, r.target))
            if r.body is not None:
                g.add(Triple(h, W.http_body, Literal(r.body)))
        return node

    root_iri = describe(root, True)
    g.add(Triple(model, W.hasBehaviour, root_iri))
    if not terminate_lists:
        for t in list(g.triples(None, RDF_REST, RDF_NIL)):
            g.discard(t)
    return g, model


def new_instance(model: Term, state: IRI = W.uninitialised) -> Graph:
    """Representation of a fresh workflow instance, ready to POST.

    The workflow instance is the member resource itself: ``<>`` relative
    to NULL_BASE, which the server rebases onto the IRI it mints. That way
    the container's ldp:contains triple names the instance directly.
    """
    it = IRI(NULL_BASE)
    return Graph([Triple(it, RDF_TYPE, W.WorkflowInstance), Triple(it, W.hasState, state),
                  Triple(it, W.workflowInstanceOf, model)])
