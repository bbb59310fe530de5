"""Basic graph pattern matching and the ASK subset of SPARQL."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

from .rdf import IRI, BNode, Graph, Literal, Term, Triple
from .turtle import TurtleSyntaxError, Variable, _Parser, parse_pattern_block

__all__ = [
    "Variable", "TriplePattern", "BasicGraphPattern", "AskQuery", "UnsupportedQuery",
    "match", "ask", "parse_ask", "substitute", "unify",
]

PatternTerm = Union[IRI, Literal, Variable]
Solution = dict  # Variable -> Term


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: PatternTerm
    predicate: Union[IRI, Variable]
    object: PatternTerm

    def __post_init__(self):
        if not isinstance(self.predicate, (IRI, Variable)):
            raise ValueError(f"pattern predicate must be an IRI or variable: {self.predicate}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> set[Variable]:
        return {t for t in self if isinstance(t, Variable)}

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object} ."


BasicGraphPattern = tuple  # tuple[TriplePattern, ...]


def blank_to_variable(term):
    """Blank nodes in patterns are query-scoped variables."""
    if isinstance(term, BNode):
        return Variable("_" + term.label)
    return term


def make_bgp(patterns: Sequence) -> BasicGraphPattern:
    return tuple(TriplePattern(*(blank_to_variable(t) for t in p)) for p in patterns)


def bgp_variables(bgp: BasicGraphPattern) -> set[Variable]:
    out: set[Variable] = set()
    for pat in bgp:
        out |= pat.variables()
    return out


def substitute(term, binding: Solution):
    if isinstance(term, Variable):
        return binding.get(term, term)
    return term


def unify(pattern: TriplePattern, triple: Triple, binding: Solution) -> Optional[Solution]:
    """Extend binding so that pattern matches triple, or return None."""
    out = binding
    for pt, tt in ((pattern.subject, triple.subject), (pattern.predicate, triple.predicate),
                   (pattern.object, triple.object)):
        if isinstance(pt, Variable):
            bound = out.get(pt)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[pt] = tt
            elif bound != tt:
                return None
        elif pt != tt:
            return None
    return out


def _lookup(pattern: TriplePattern, binding: Solution):
    """The pattern's positions under binding, None where still unbound."""
    s, p, o = pattern.subject, pattern.predicate, pattern.object
    if type(s) is Variable:
        s = binding.get(s)
    if type(p) is Variable:
        p = binding.get(p)
    if type(o) is Variable:
        o = binding.get(o)
    return s, p, o


def _pick(patterns: list, graphs: list, binding: Solution) -> int:
    # patterns joined to what is already bound first (no cross products),
    # then most bound positions, then smallest index bucket, then leftmost
    if len(patterns) == 1:
        return 0
    best, best_key = 0, None
    for i, pat in enumerate(patterns):
        s, p, o = _lookup(pat, binding)
        bound = (s is not None) + (p is not None) + (o is not None)
        if bound == 3:
            return i
        joined = any(type(t) is Variable and t in binding for t in pat)
        key = (not joined, -bound, graphs[i].count(s, p, o), i)
        if best_key is None or key < best_key:
            best, best_key = i, key
    return best


def _solve(patterns: list, graphs: list, binding: Solution) -> Iterator[Solution]:
    if not patterns:
        yield binding
        return
    i = _pick(patterns, graphs, binding)
    pat = patterns[i]
    rest, rest_graphs = patterns[:i] + patterns[i + 1:], graphs[:i] + graphs[i + 1:]
    for triple in graphs[i].triples(*_lookup(pat, binding)):
        extended = unify(pat, triple, binding)
        if extended is not None:
            yield from _solve(rest, rest_graphs, extended)


def solve(patterns: Sequence[TriplePattern], g: Graph, binding: Optional[Solution] = None,
          graphs: Optional[Sequence[Graph]] = None) -> Iterator[Solution]:
    """Yield every extension of binding that maps all patterns into g.

    graphs, if given, names a graph per pattern to match it against instead
    of g; semi-naive evaluation uses this to restrict one pattern to the
    newly derived triples.
    """
    patterns = list(patterns)
    graphs = [g] * len(patterns) if graphs is None else list(graphs)
    yield from _solve(patterns, graphs, {} if binding is None else binding)


def _project(binding: Solution) -> Solution:
    return {k: v for k, v in binding.items() if not k.name.startswith("_")}


def match(bgp: Sequence[TriplePattern], g: Graph) -> list[Solution]:
    """All distinct solutions of bgp over g; blank-node variables are projected away."""
    seen = set()
    out = []
    for binding in solve(make_bgp(bgp), g):
        sol = _project(binding)
        key = frozenset(sol.items())
        if key not in seen:
            seen.add(key)
            out.append(sol)
    return out


@dataclass(frozen=True)
class AskQuery:
    bgp: BasicGraphPattern
    text: str = ""


class UnsupportedQuery(ValueError):
    """The query uses SPARQL beyond a single basic graph pattern."""


_UNSUPPORTED = {"FILTER", "OPTIONAL", "UNION", "MINUS", "GRAPH", "BIND", "VALUES",
                "SERVICE", "SELECT", "CONSTRUCT", "DESCRIBE", "EXISTS", "NOT", "LIMIT",
                "OFFSET", "ORDER", "GROUP", "HAVING", "FROM"}


_QUOTED = re.compile(r'"""[\s\S]*?"""|"(?:[^"\\\n]|\\.)*"|<[^<>"\s]*>|#[^\n]*')
_KEYWORD = re.compile(r"(?<![\w:?$])[A-Za-z]+(?![\w:])")


def parse_ask(text: str, base: Optional[str] = None,
              prefixes: Optional[dict] = None) -> AskQuery:
    """Parse ``[PREFIX ...] ASK [WHERE] { triple patterns }``.

    Raises UnsupportedQuery for FILTER, OPTIONAL, UNION and other features
    beyond one basic graph pattern, TurtleSyntaxError for malformed input.
    """
    bare = _QUOTED.sub(" ", text)
    m = next((m for m in _KEYWORD.finditer(bare) if m.group(0).upper() in _UNSUPPORTED), None)
    if m is not None:
        line = bare.count("\n", 0, m.start()) + 1
        raise UnsupportedQuery(f"unsupported SPARQL feature {m.group(0).upper()} (line {line})")
    p = _Parser(text, base, prefixes, allow_variables=True)
    while p.directive():
        pass
    if not p.at_word("ASK"):
        p.error("expected ASK")
    p.next()
    if p.at_word("WHERE"):
        p.next()
    p.expect("punct", "{")
    patterns = parse_pattern_block(p)
    p.expect("punct", "}")
    if not p.at("eof"):
        p.error(f"unexpected {p.tok.text!r} after the query pattern")
    try:
        bgp = make_bgp(patterns)
    except ValueError as exc:
        raise TurtleSyntaxError(str(exc)) from None
    return AskQuery(bgp, text)


def ask(q: Union[AskQuery, Sequence[TriplePattern]], g: Graph) -> bool:
    bgp = q.bgp if isinstance(q, AskQuery) else make_bgp(q)
    return next(solve(bgp, g), None) is not None
