"""Monotonic derivation rules, HTTP request rules and their evaluation.

Rule programs are written in a Notation3 subset::

    @prefix ldp: <http://www.w3.org/ns/ldp#> .
    <http://example.org/ldpc> a ldp:BasicContainer .          # initial assertion
    { ?c ldp:contains ?e } => { ?e a ldp:Resource } .          # derivation rule
    { ?c ldp:contains ?e } => { [] http:mthd httpm:GET ;       # request rule
                                   http:requestURI ?e } .

A request head describes exactly one request with ``http:mthd`` (an
``httpm:`` IRI or a variable bound to one), ``http:requestURI`` and, for
PUT and POST, ``http:body``. The body is either a quoted formula of triple
templates or a variable bound to a Turtle string literal. Relative IRIs in
a body formula refer to the resource the request creates or replaces: the
engine writes them relative to ``NULL_BASE`` and the server resolves them
against the target (PUT) or the newly minted member (POST).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

from .query import (
    TriplePattern, Variable, bgp_variables, make_bgp, solve, substitute, unify, _lookup,
)
from .rdf import (
    HTTP, HTTPM, IRI, BNode, Graph, Literal, Term, Triple,
)
from .turtle import Formula, TurtleSyntaxError, parse_n3, parse_turtle, term_to_turtle

log = logging.getLogger(__name__)

NULL_BASE = "http://null.invalid/"
METHODS = ("GET", "PUT", "POST", "DELETE")

HTTP_MTHD = IRI(HTTP + "mthd")
HTTP_REQUEST_URI = IRI(HTTP + "requestURI")
HTTP_BODY = IRI(HTTP + "body")


class UnsafeRule(ValueError):
    """A head variable does not occur in the rule body."""

    def __init__(self, message: str, variable: Optional[Variable] = None):
        super().__init__(message)
        self.variable = variable


@dataclass(frozen=True)
class DerivationRule:
    body: tuple
    head: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "body", make_bgp(self.body))
        head = tuple(TriplePattern(*p) for p in self.head)
        object.__setattr__(self, "head", head)
        bound = bgp_variables(self.body)
        for pat in head:
            for term in pat:
                if isinstance(term, BNode):
                    raise UnsafeRule(f"existential blank node {term} in rule head{self._where()}")
                if isinstance(term, Variable) and term not in bound:
                    raise UnsafeRule(f"unsafe rule{self._where()}: head variable {term} "
                                     f"does not occur in the body", term)

    def _where(self):
        return f" {self.name}" if self.name else ""


@dataclass(frozen=True)
class RequestRule:
    body: tuple
    method: Union[str, Variable]
    target: Union[IRI, Variable]
    payload: tuple = ()
    payload_var: Optional[Variable] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "body", make_bgp(self.body))
        object.__setattr__(self, "payload", tuple(TriplePattern(*p) for p in self.payload))
        if isinstance(self.method, str) and self.method not in METHODS:
            raise ValueError(f"unknown HTTP method {self.method}")
        if self.method in ("GET", "DELETE") and (self.payload or self.payload_var):
            raise ValueError(f"{self.method} request rules carry no payload")
        bound = bgp_variables(self.body)
        used = [self.method, self.target, self.payload_var]
        used += [t for pat in self.payload for t in pat]
        for term in used:
            if isinstance(term, Variable) and term not in bound:
                where = f" {self.name}" if self.name else ""
                raise UnsafeRule(f"unsafe rule{where}: head variable {term} does not occur "
                                 f"in the body", term)

    def may_be(self, method_filter: Optional[str]) -> bool:
        if method_filter is None or isinstance(self.method, Variable):
            return True
        return (self.method == "GET") == (method_filter == "GET")


@dataclass(frozen=True)
class HttpRequest:
    method: str
    target: IRI
    payload: frozenset = frozenset()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown HTTP method {self.method}")
        if not isinstance(self.target, IRI):
            raise ValueError(f"request target must be an IRI: {self.target}")
        if "#" in self.target.value:
            object.__setattr__(self, "target", self.target.defrag())
        if self.method in ("GET", "DELETE") and self.payload:
            raise ValueError(f"{self.method} carries no payload")

    def graph(self) -> Graph:
        return Graph(self.payload)

    def __str__(self) -> str:
        return f"{self.method} {self.target.value}" + (
            f" ({len(self.payload)} triples)" if self.payload else "")


@dataclass
class Program:
    assertions: Graph = field(default_factory=Graph)
    derivations: list = field(default_factory=list)
    requests: list = field(default_factory=list)
    prefixes: dict = field(default_factory=dict)

    def __add__(self, other: "Program") -> "Program":
        return Program(self.assertions | other.assertions,
                       self.derivations + other.derivations,
                       self.requests + other.requests,
                       {**other.prefixes, **self.prefixes})

    def __len__(self) -> int:
        return len(self.derivations) + len(self.requests)


# -- parsing -----------------------------------------------------------------

def _method_name(term) -> Optional[str]:
    if isinstance(term, IRI) and term.value.startswith(HTTPM):
        name = term.value[len(HTTPM):]
    elif isinstance(term, Literal):
        name = term.lexical
    else:
        return None
    return name.upper() if name.upper() in METHODS else None


def _request_rule(body, head, name) -> RequestRule:
    subjects = {s for s, p, o in head}
    if len(subjects) != 1:
        raise ValueError(f"request head must describe exactly one request{name}")
    methods = [o for s, p, o in head if p == HTTP_MTHD]
    targets = [o for s, p, o in head if p == HTTP_REQUEST_URI]
    bodies = [o for s, p, o in head if p == HTTP_BODY]
    extra = [p for s, p, o in head if p not in (HTTP_MTHD, HTTP_REQUEST_URI, HTTP_BODY)]
    if len(methods) != 1 or len(targets) != 1 or len(bodies) > 1 or extra:
        raise ValueError(f"request head needs one http:mthd, one http:requestURI "
                         f"and at most one http:body{name}")
    method = methods[0] if isinstance(methods[0], Variable) else _method_name(methods[0])
    if method is None:
        raise ValueError(f"unknown request method {methods[0]}{name}")
    payload, payload_var = (), None
    if bodies:
        if isinstance(bodies[0], Formula):
            payload = bodies[0].patterns
        elif isinstance(bodies[0], Variable):
            payload_var = bodies[0]
        else:
            raise ValueError(f"http:body must be a formula or a variable{name}")
    return RequestRule(body, method, targets[0], payload, payload_var, name.strip(" ()"))


def parse_program(text: str, base: Optional[str] = None,
                  prefixes: Optional[dict] = None) -> Program:
    """Parse an N3-subset rule file into a Program with validated safety."""
    doc = parse_n3(text, base, prefixes, formula_base=NULL_BASE)
    program = Program(Graph(doc.assertions), prefixes=doc.prefixes)
    for body, head, line in doc.rules:
        name = f" (line {line})"
        if any(p == HTTP_MTHD for s, p, o in head):
            program.requests.append(_request_rule(body, head, name))
        else:
            for pat in head:
                if isinstance(pat[2], Formula):
                    raise ValueError(f"quoted formula outside a request body{name}")
            program.derivations.append(DerivationRule(body, head, f"line {line}"))
    return program


def _pattern_text(pat, prefixes, base=None):
    return " ".join(term_to_turtle(t, prefixes, base) for t in pat) + " ."


def _body_text(bgp, prefixes):
    return "{ " + " ".join(_pattern_text(p, prefixes) for p in bgp) + " }"


def serialize_program(program: Program, prefixes: Optional[dict] = None) -> str:
    """Write a program back as N3-subset text that parse_program accepts."""
    prefixes = dict(prefixes or program.prefixes)
    lines = [f"@prefix {k}: <{v}> ." for k, v in sorted(prefixes.items())]
    lines.append("")
    for t in program.assertions.sorted():
        lines.append(_pattern_text(t, prefixes))
    for rule in program.derivations:
        head = " ".join(_pattern_text(p, prefixes) for p in rule.head)
        lines.append(f"{_body_text(rule.body, prefixes)} => {{ {head} }} .")
    for rule in program.requests:
        method = (term_to_turtle(rule.method, prefixes) if isinstance(rule.method, Variable)
                  else term_to_turtle(IRI(HTTPM + rule.method), prefixes))
        parts = [f"[] {term_to_turtle(HTTP_MTHD, prefixes)} {method}",
                 f"{term_to_turtle(HTTP_REQUEST_URI, prefixes)} "
                 f"{term_to_turtle(rule.target, prefixes)}"]
        if rule.payload:
            inner = " ".join(_pattern_text(p, prefixes, NULL_BASE) for p in rule.payload)
            parts.append(f"{term_to_turtle(HTTP_BODY, prefixes)} {{ {inner} }}")
        elif rule.payload_var is not None:
            parts.append(f"{term_to_turtle(HTTP_BODY, prefixes)} {rule.payload_var}")
        lines.append(f"{_body_text(rule.body, prefixes)} => {{ {' ; '.join(parts)} }} .")
    return "\n".join(lines) + "\n"


# -- evaluation --------------------------------------------------------------

def _instantiate(pat: TriplePattern, binding) -> Optional[Triple]:
    s, p, o = (substitute(t, binding) for t in pat)
    if isinstance(s, (Literal, Variable)) or not isinstance(p, IRI) or isinstance(o, Variable):
        return None
    return Triple(s, p, o)


def _derive_all(rules: Sequence[DerivationRule], g: Graph) -> list[Triple]:
    out = []
    for rule in rules:
        for binding in solve(rule.body, g):
            for pat in rule.head:
                t = _instantiate(pat, binding)
                if t is not None and t not in g:
                    out.append(t)
    return out


def _derive_delta(rules: Sequence[DerivationRule], g: Graph, delta: Graph) -> list[Triple]:
    """Consequences that use at least one triple of delta (g already contains delta)."""
    out = []
    for rule in rules:
        body = rule.body
        for i, pat in enumerate(body):
            if not delta.count(*_lookup(pat, {})):
                continue
            graphs = [g] * len(body)
            graphs[i] = delta
            for binding in solve(body, g, None, graphs):
                for h in rule.head:
                    derived = _instantiate(h, binding)
                    if derived is not None and derived not in g:
                        out.append(derived)
    return out


Hook = Callable[[Graph], Iterable[Triple]]


class Saturator:
    """Keeps a graph closed under derivation rules as facts are added.

    Evaluation is semi-naive: each round only joins against the triples
    that were new in the previous round. Hooks are monotone procedures
    (graph -> triples) run whenever the rules reach a fixpoint; if they
    add anything, rule evaluation resumes.
    """

    def __init__(self, graph: Graph, rules: Sequence[DerivationRule],
                 hooks: Sequence[Hook] = ()):
        self.graph = graph
        self.rules = list(rules)
        self.hooks = list(hooks)
        self.derived = 0
        self._started = False

    def add(self, triples: Iterable[Triple] = ()) -> int:
        """Add base facts and saturate; returns the number of triples derived."""
        before = self.derived
        delta = Graph(self.graph.add_all(triples))
        if not self._started:
            self._started = True
            delta = self.graph.copy()
            delta.add_all(self._add(_derive_all([r for r in self.rules if not r.body],
                                                self.graph)))
        while True:
            while len(delta):
                delta = Graph(self._add(_derive_delta(self.rules, self.graph, delta)))
            extra = [t for hook in self.hooks for t in hook(self.graph)]
            delta = Graph(self._add(extra))
            if not len(delta):
                return self.derived - before

    def _add(self, triples) -> list[Triple]:
        added = self.graph.add_all(triples)
        self.derived += len(added)
        return added


def saturate(wm: Graph, rules: Sequence[DerivationRule], hooks: Sequence[Hook] = ()) -> Graph:
    """Least fixpoint of wm under rules (semi-naive); wm itself is not modified."""
    out = wm.copy()
    Saturator(out, rules, hooks).add()
    return out


def saturate_naive(wm: Graph, rules: Sequence[DerivationRule],
                   hooks: Sequence[Hook] = ()) -> Graph:
    """Reference evaluator: re-run every rule on the whole graph until nothing changes."""
    out = wm.copy()
    while True:
        new = _derive_all(rules, out)
        new += [t for hook in hooks for t in hook(out)]
        if not out.add_all(new):
            return out


def _payload(rule: RequestRule, binding, target: IRI) -> Optional[frozenset]:
    if rule.payload_var is not None:
        text = binding[rule.payload_var]
        if not isinstance(text, Literal):
            log.warning("request body %s is not a literal; skipped", text)
            return None
        try:
            return frozenset(parse_turtle(text.lexical, base=NULL_BASE))
        except TurtleSyntaxError as exc:
            log.warning("request body for %s does not parse: %s", target.value, exc)
            return None
    triples = []
    for pat in rule.payload:
        t = _instantiate(pat, binding)
        if t is None:
            log.warning("payload template %s yields no triple; skipped", pat)
            continue
        triples.append(t)
    return frozenset(triples)


def fire_request_rules(wm: Graph, rules: Sequence[RequestRule],
                       method_filter: Optional[str] = None) -> set[HttpRequest]:
    """Instantiate request rules against wm; identical requests collapse.

    method_filter "GET" keeps GET requests only, "non-GET" everything else,
    None keeps all.
    """
    out: set[HttpRequest] = set()
    for rule in rules:
        if not rule.may_be(method_filter):
            continue
        for binding in solve(rule.body, wm):
            method = rule.method
            if isinstance(method, Variable):
                method = _method_name(binding[method])
                if method is None:
                    log.warning("unknown method %s in rule %s", binding[rule.method], rule.name)
                    continue
            if method_filter is not None and (method == "GET") != (method_filter == "GET"):
                continue
            target = substitute(rule.target, binding)
            assert not isinstance(target, Variable), "safe rules bind every target"
            if not isinstance(target, IRI):
                log.warning("request target %s is not an IRI; skipped", target)
                continue
            payload = frozenset()
            if method in ("PUT", "POST"):
                payload = _payload(rule, binding, target)
                if payload is None:
                    continue
            out.add(HttpRequest(method, target, payload))
    return out
