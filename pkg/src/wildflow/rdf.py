"""RDF terms, triples and indexed graphs.

Graphs are plain in-memory triple sets with three hash indexes. They are
mutable, but everything outside the runtime's working memory treats them as
values: copy before changing a graph that somebody else handed you.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
OWL = "http://www.w3.org/2002/07/owl#"
LDP = "http://www.w3.org/ns/ldp#"
HTTP = "http://www.w3.org/2011/http#"
HTTPM = "http://www.w3.org/2011/http-methods#"
SP = "http://spinrdf.org/sp#"
SSN = "http://www.w3.org/ns/ssn/"
SOSA = "http://www.w3.org/ns/sosa/"
BRICK = "https://brickschema.org/schema/Brick#"
WILD = "http://purl.org/wild/vocab#"

DEFAULT_PREFIXES = {
    "rdf": RDF,
    "rdfs": RDFS,
    "xsd": XSD,
    "owl": OWL,
    "ldp": LDP,
    "http": HTTP,
    "httpm": HTTPM,
    "sp": SP,
    "ssn": SSN,
    "sosa": SOSA,
    "brick": BRICK,
    "": WILD,
}


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __str__(self) -> str:
        return f"<{self.value}>"

    def sort_key(self):
        return (0, self.value, "", "")

    def defrag(self) -> "IRI":
        return IRI(self.value.split("#", 1)[0])


@dataclass(frozen=True, slots=True)
class BNode:
    label: str

    def __str__(self) -> str:
        return f"_:{self.label}"

    def sort_key(self):
        return (1, self.label, "", "")


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: Optional[str] = None
    lang: Optional[str] = None

    def __post_init__(self):
        # plain and xsd:string literals compare equal
        if self.datatype == XSD + "string":
            object.__setattr__(self, "datatype", None)
        if self.lang is not None:
            object.__setattr__(self, "lang", self.lang.lower())

    def __str__(self) -> str:
        text = '"' + escape_string(self.lexical) + '"'
        if self.lang:
            return f"{text}@{self.lang}"
        if self.datatype:
            return f"{text}^^<{self.datatype}>"
        return text

    def sort_key(self):
        return (2, self.lexical, self.datatype or "", self.lang or "")


Term = Union[IRI, BNode, Literal]

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def escape_string(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


_bnode_ids = itertools.count()


def fresh_bnode(hint: str = "b") -> BNode:
    """Return a blank node whose label is unique within this process."""
    return BNode(f"{hint}{next(_bnode_ids)}")


def boolean(value: bool) -> Literal:
    return Literal("true" if value else "false", XSD + "boolean")


def integer(value: int) -> Literal:
    return Literal(str(value), XSD + "integer")


class Namespace(str):
    """String subclass minting IRIs by attribute or item access."""

    def __getattr__(self, name: str) -> IRI:
        if name.startswith("__"):
            raise AttributeError(name)
        return IRI(str(self) + name)

    def __getitem__(self, name) -> IRI:  # type: ignore[override]
        return IRI(str(self) + name)


RDF_NS = Namespace(RDF)
RDFS_NS = Namespace(RDFS)
OWL_NS = Namespace(OWL)
LDP_NS = Namespace(LDP)
HTTP_NS = Namespace(HTTP)
HTTPM_NS = Namespace(HTTPM)
SP_NS = Namespace(SP)

RDF_TYPE = IRI(RDF + "type")
RDF_FIRST = IRI(RDF + "first")
RDF_REST = IRI(RDF + "rest")
RDF_NIL = IRI(RDF + "nil")
TRUE = boolean(True)
FALSE = boolean(False)


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Term
    predicate: IRI
    object: Term

    def __post_init__(self):
        if isinstance(self.subject, Literal):
            raise ValueError(f"literal in subject position: {self.subject}")
        if not isinstance(self.predicate, IRI):
            raise ValueError(f"predicate must be an IRI: {self.predicate}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object} ."

    def sort_key(self):
        return (self.subject.sort_key(), self.predicate.sort_key(), self.object.sort_key())


class Graph:
    """A set of triples with subject, predicate and object indexes."""

    def __init__(self, triples: Iterable[Triple] = (), prefixes: Optional[dict] = None):
        self._triples: set[Triple] = set()
        self._by_s: dict[Term, set[Triple]] = {}
        self._by_p: dict[IRI, set[Triple]] = {}
        self._by_o: dict[Term, set[Triple]] = {}
        self.prefixes: dict[str, str] = dict(prefixes or {})
        for t in triples:
            self.add(t)

    def add(self, triple: Triple) -> bool:
        """Add a triple; return True if it was new."""
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._by_s.setdefault(triple.subject, set()).add(triple)
        self._by_p.setdefault(triple.predicate, set()).add(triple)
        self._by_o.setdefault(triple.object, set()).add(triple)
        return True

    def add_all(self, triples: Iterable[Triple]) -> list[Triple]:
        return [t for t in triples if self.add(t)]

    def discard(self, triple: Triple) -> None:
        if triple not in self._triples:
            return
        self._triples.remove(triple)
        for index, key in ((self._by_s, triple.subject), (self._by_p, triple.predicate),
                           (self._by_o, triple.object)):
            bucket = index[key]
            bucket.discard(triple)
            if not bucket:
                del index[key]

    def triples(self, s: Optional[Term] = None, p: Optional[IRI] = None,
                o: Optional[Term] = None) -> Iterator[Triple]:
        """Yield triples matching the given positions (None is a wildcard)."""
        if s is not None and p is not None and o is not None:
            if isinstance(s, Literal) or not isinstance(p, IRI):
                return
            t = Triple(s, p, o)
            if t in self._triples:
                yield t
            return
        candidates: Optional[set[Triple]] = None
        for index, key in ((self._by_s, s), (self._by_p, p), (self._by_o, o)):
            if key is None:
                continue
            bucket = index.get(key)
            if not bucket:
                return
            if candidates is None or len(bucket) < len(candidates):
                candidates = bucket
        if candidates is None:
            yield from list(self._triples)
            return
        for t in list(candidates):
            if ((s is None or t.subject == s) and (p is None or t.predicate == p)
                    and (o is None or t.object == o)):
                yield t

    def count(self, s=None, p=None, o=None) -> int:
        """Cheap upper bound on the number of matches, used for join ordering."""
        best = len(self._triples)
        for index, key in ((self._by_s, s), (self._by_p, p), (self._by_o, o)):
            if key is not None:
                best = min(best, len(index.get(key, ())))
        return best

    def objects(self, s: Term, p: IRI) -> list[Term]:
        return [t.object for t in self.triples(s, p, None)]

    def subjects(self, p: IRI, o: Term) -> list[Term]:
        return [t.subject for t in self.triples(None, p, o)]

    def value(self, s: Term, p: IRI) -> Optional[Term]:
        objs = self.objects(s, p)
        return objs[0] if len(objs) == 1 else None

    def blank_nodes(self) -> set[BNode]:
        found = {k for k in self._by_s if isinstance(k, BNode)}
        found.update(k for k in self._by_o if isinstance(k, BNode))
        return found

    def copy(self) -> "Graph":
        return Graph(self._triples, self.prefixes)

    def __contains__(self, triple: object) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    __hash__ = None  # type: ignore[assignment]

    def __or__(self, other: "Graph") -> "Graph":
        out = self.copy()
        out.add_all(other)
        for k, v in other.prefixes.items():
            out.prefixes.setdefault(k, v)
        return out

    def __sub__(self, other: "Graph") -> "Graph":
        return Graph((t for t in self if t not in other), self.prefixes)

    def __le__(self, other: "Graph") -> bool:
        return self._triples <= other._triples

    def __repr__(self) -> str:
        return f"<Graph with {len(self)} triples>"

    def sorted(self) -> list[Triple]:
        return sorted(self._triples, key=Triple.sort_key)


def rename_blanks(g: Graph, mapping: Optional[dict[BNode, Term]] = None) -> Graph:
    """Copy g, replacing blank nodes through mapping (fresh ones by default)."""
    mapping = {} if mapping is None else mapping

    def sub(term):
        if isinstance(term, BNode):
            if term not in mapping:
                mapping[term] = fresh_bnode()
            return mapping[term]
        return term

    return Graph((Triple(sub(t.subject), t.predicate, sub(t.object)) for t in g), g.prefixes)


def merge(a: Graph, b: Graph) -> Graph:
    """RDF merge: the union of a and b with b's clashing blank nodes renamed apart.

    Merging a graph with itself is a plain copy, since both operands then
    come from the same source.
    """
    if a is b:
        return a.copy()
    clash = a.blank_nodes() & b.blank_nodes()
    if clash:
        b = rename_blanks(b, {n: fresh_bnode() for n in clash} | {
            n: n for n in b.blank_nodes() - clash})
    return a | b


def rebase(g: Graph, old_base: str, new_base: str) -> Graph:
    """Rewrite every IRI starting with old_base to start with new_base instead."""
    def sub(term):
        if isinstance(term, IRI) and term.value.startswith(old_base):
            return IRI(new_base + term.value[len(old_base):])
        return term

    return Graph((Triple(sub(t.subject), sub(t.predicate), sub(t.object)) for t in g), g.prefixes)


# -- RDF collections ---------------------------------------------------------

class ListError(ValueError):
    """An RDF collection that is not a well-formed, rdf:nil-terminated chain."""

    def __init__(self, message: str, node: Optional[Term] = None):
        super().__init__(message)
        self.node = node


class ListNotTerminated(ListError):
    pass


class MalformedList(ListError):
    pass


def make_list(members: Sequence[Term], g: Graph) -> Term:
    if not members:
        return RDF_NIL
    nodes = [fresh_bnode("l") for _ in members]
    for i, (node, member) in enumerate(zip(nodes, members)):
        g.add(Triple(node, RDF_FIRST, member))
        g.add(Triple(node, RDF_REST, nodes[i + 1] if i + 1 < len(nodes) else RDF_NIL))
    return nodes[0]


def read_list(head: Term, g: Graph) -> list[Term]:
    """Follow rdf:first/rdf:rest from head and return the members in order.

    Raises ListNotTerminated when the chain stops before rdf:nil and
    MalformedList for branching chains, missing rdf:first and cycles.
    """
    members: list[Term] = []
    seen: set[Term] = set()
    node = head
    while node != RDF_NIL:
        if node in seen:
            raise MalformedList(f"cycle at {node}", node)
        seen.add(node)
        firsts = g.objects(node, RDF_FIRST)
        rests = g.objects(node, RDF_REST)
        if len(firsts) > 1 or len(rests) > 1:
            raise MalformedList(f"branching list node {node}", node)
        if not firsts and not rests:
            raise ListNotTerminated(f"list ends at {node} without reaching rdf:nil", node)
        if not firsts:
            raise MalformedList(f"list node {node} lacks rdf:first", node)
        members.append(firsts[0])
        if not rests:
            raise ListNotTerminated(f"list node {node} lacks rdf:rest", node)
        node = rests[0]
    return members


# -- isomorphism -------------------------------------------------------------

def _refine(g: Graph, blanks: list[BNode], colour: dict[BNode, str]) -> dict[BNode, str]:
    """Colour refinement: colour a blank node by the multiset of its edges."""
    def show(term):
        return "_:" + colour[term] if isinstance(term, BNode) else str(term)

    while True:
        sig = {}
        for b in blanks:
            edges = sorted([f"+{t.predicate}{show(t.object)}" for t in g.triples(b, None, None)]
                           + [f"-{t.predicate}{show(t.subject)}" for t in g.triples(None, None, b)])
            sig[b] = colour[b] + "|" + ";".join(edges)
        ranks = {s: str(i) for i, s in enumerate(sorted(set(sig.values())))}
        new = {b: ranks[sig[b]] for b in blanks}
        if len(set(new.values())) == len(set(colour.values())):
            return new
        colour = new


def canonical_form(g: Graph) -> tuple:
    """A labelling-independent form of g: equal iff the graphs are isomorphic.

    Blank nodes are coloured by refinement; remaining ties are broken by
    trying each tied node in turn and keeping the smallest result.
    """
    blanks = sorted(g.blank_nodes(), key=BNode.sort_key)
    colour = _refine(g, blanks, {b: "0" for b in blanks})
    return _canonical_search(g, blanks, colour)


def _canonical_search(g: Graph, blanks: list[BNode], colour: dict[BNode, str]) -> tuple:
    classes: dict[str, list[BNode]] = {}
    for b in blanks:
        classes.setdefault(colour[b], []).append(b)
    tied = [c for c in sorted(classes) if len(classes[c]) > 1]
    if not tied:
        def label(term):
            return ("_", colour[term]) if isinstance(term, BNode) else ("", term.sort_key())
        return tuple(sorted((label(t.subject), t.predicate.value, label(t.object)) for t in g))
    best = None
    for b in classes[tied[0]]:
        trial = dict(colour)
        trial[b] = colour[b] + "*"
        form = _canonical_search(g, blanks, _refine(g, blanks, trial))
        if best is None or form < best:
            best = form
    return best


def isomorphic(a: Graph, b: Graph) -> bool:
    if len(a) != len(b) or len(a.blank_nodes()) != len(b.blank_nodes()):
        return False
    return canonical_form(a) == canonical_form(b)
