"""Turtle and Notation3-subset reading and Turtle writing.

One tokenizer and one recursive-descent parser serve three grammars:
plain Turtle documents, N3 rule files (``{ body } => { head } .``), and the
triple block of SPARQL ASK queries. Variables and quoted formulas are only
accepted by the latter two.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union
from urllib.parse import urljoin

from .rdf import (
    IRI, RDF_FIRST, RDF_NIL, RDF_REST, RDF_TYPE, XSD, BNode, Graph, Literal, Triple,
    escape_string, fresh_bnode,
)


class TurtleSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"

    def sort_key(self):
        return (3, self.name, "", "")


@dataclass(frozen=True)
class Formula:
    """A quoted graph: a tuple of (s, p, o) patterns that may hold variables."""
    patterns: tuple = ()


PatternTerm = Union[IRI, BNode, Literal, Variable, Formula]

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<long>\"\"\"(?:[^"\\]|\\.|"(?!""))*\"\"\"|'''(?:[^'\\]|\\.|'(?!''))*''')
  | (?P<string>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<bnode>_:[A-Za-z0-9_](?:[\w\-.]*[\w\-])?)
  | (?P<var>[?$][A-Za-z_][\w]*)
  | (?P<at>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<number>[+-]?(?:\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+))
  | (?P<implies>=>)
  | (?P<dtype>\^\^)
  | (?P<pname>(?:[A-Za-z][\w\-]*(?:\.[\w\-]+)*)?:(?:[\w\-:%]|\.(?=[\w\-:%]))*)
  | (?P<word>[A-Za-z][\w]*)
  | (?P<punct>[.;,\[\](){}])
""", re.VERBOSE)

_STRING_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f",
                   '"': '"', "'": "'", "\\": "\\"}
_ESCAPE_RE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)", re.S)


def _unescape(body: str) -> str:
    def sub(m):
        code = m.group(1)
        if code[0] in "uU":
            return chr(int(code[1:], 16))
        if code in _STRING_ESCAPES:
            return _STRING_ESCAPES[code]
        raise ValueError(f"bad escape \\{code}")
    return _ESCAPE_RE.sub(sub, body)


@dataclass(slots=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TurtleSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


_ABSOLUTE_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


def resolve_iri(ref: str, base: Optional[str]) -> str:
    """Resolve a possibly relative IRI reference against base (RFC 3986)."""
    if _ABSOLUTE_RE.match(ref):
        return ref
    if base is None:
        raise ValueError(f"relative IRI <{ref}> with no base")
    if ref == "":
        return base.split("#", 1)[0]
    if ref.startswith("#"):
        return base.split("#", 1)[0] + ref
    resolved = urljoin(base, ref)
    if not _ABSOLUTE_RE.match(resolved):
        raise ValueError(f"cannot resolve <{ref}> against <{base}>")
    return resolved


@dataclass
class N3Document:
    assertions: list = field(default_factory=list)
    rules: list = field(default_factory=list)  # (body patterns, head patterns, line)
    prefixes: dict = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str, base: Optional[str], prefixes: Optional[dict] = None,
                 allow_variables: bool = False, allow_formulas: bool = False,
                 formula_base: Optional[str] = None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.base = base
        self.prefixes = dict(prefixes or {})
        self.allow_variables = allow_variables
        self.allow_formulas = allow_formulas
        self.formula_base = formula_base
        self.bnodes: dict[str, BNode] = {}
        self.out: list = []
        self.formula_depth = 0

    # -- token helpers
    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.tok
        raise TurtleSyntaxError(message, tok.line, tok.column)

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def at_word(self, *words: str) -> bool:
        return self.tok.kind == "word" and self.tok.text.upper() in words

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        if not self.at(kind, text):
            self.error(f"expected {text or kind}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    # -- directives
    def directive(self) -> bool:
        tok = self.tok
        if tok.kind == "at" and tok.text in ("@prefix", "@base"):
            self.next()
            self._directive_body(tok.text[1:])
            self.expect("punct", ".")
            return True
        if tok.kind == "word" and tok.text.upper() in ("PREFIX", "BASE"):
            self.next()
            self._directive_body(tok.text.lower())
            return True
        return False

    def _directive_body(self, which: str):
        if which == "prefix":
            name = self.expect("pname")
            if not name.text.endswith(":") or name.text.count(":") != 1:
                self.error("malformed prefix name", name)
            iri = self.expect("iri")
            self.prefixes[name.text[:-1]] = self._resolve(iri.text[1:-1], iri)
        else:
            iri = self.expect("iri")
            self.base = self._resolve(iri.text[1:-1], iri)

    def _resolve(self, ref: str, tok: _Token) -> str:
        # request bodies sit in formulas nested inside a rule head
        base = self.formula_base if self.formula_depth >= 2 and self.formula_base else self.base
        try:
            return resolve_iri(_unescape(ref), base)
        except ValueError as exc:
            self.error(str(exc), tok)

    # -- terms
    def iri(self) -> IRI:
        tok = self.next()
        if tok.kind == "iri":
            return IRI(self._resolve(tok.text[1:-1], tok))
        if tok.kind == "pname":
            prefix, local = tok.text.split(":", 1)
            if prefix not in self.prefixes:
                self.error(f"unknown prefix {prefix!r}", tok)
            return IRI(self.prefixes[prefix] + local.replace("\\", ""))
        if tok.kind == "word" and tok.text == "a":
            return RDF_TYPE
        self.error(f"expected an IRI, found {tok.text!r}", tok)

    def blank(self, label: str) -> BNode:
        if label not in self.bnodes:
            self.bnodes[label] = fresh_bnode()
        return self.bnodes[label]

    def subject(self):
        tok = self.tok
        if tok.kind in ("iri", "pname"):
            return self.iri()
        if tok.kind == "bnode":
            self.next()
            return self.blank(tok.text[2:])
        if tok.kind == "var":
            return self.variable()
        if self.at("punct", "["):
            return self.property_list_node()
        if self.at("punct", "("):
            return self.collection()
        if self.at("punct", "{"):
            return self.formula()
        self.error(f"unexpected {tok.text or 'end of input'!r} in subject position")

    def predicate(self):
        if self.at("var"):
            return self.variable()
        return self.iri()

    def object(self):
        tok = self.tok
        if tok.kind in ("string", "long"):
            return self.literal()
        if tok.kind == "number":
            self.next()
            text = tok.text
            if re.fullmatch(r"[+-]?\d+", text):
                return Literal(text, XSD + "integer")
            if "e" in text.lower():
                return Literal(text, XSD + "double")
            return Literal(text, XSD + "decimal")
        if tok.kind == "word" and tok.text in ("true", "false"):
            self.next()
            return Literal(tok.text, XSD + "boolean")
        return self.subject()

    def literal(self) -> Literal:
        tok = self.next()
        body = tok.text[3:-3] if tok.kind == "long" else tok.text[1:-1]
        try:
            lexical = _unescape(body)
        except ValueError as exc:
            self.error(str(exc), tok)
        if self.at("at"):
            return Literal(lexical, lang=self.next().text[1:])
        if self.at("dtype"):
            self.next()
            return Literal(lexical, self.iri().value)
        return Literal(lexical)

    def variable(self) -> Variable:
        tok = self.next()
        if not self.allow_variables:
            self.error(f"variable {tok.text} not allowed here", tok)
        return Variable(tok.text[1:])

    def property_list_node(self):
        self.expect("punct", "[")
        node = fresh_bnode()
        if not self.at("punct", "]"):
            self.predicate_object_list(node)
        self.expect("punct", "]")
        return node

    def collection(self):
        open_tok = self.expect("punct", "(")
        items = []
        while not self.at("punct", ")"):
            if self.at("eof"):
                self.error("unterminated collection", open_tok)
            items.append(self.object())
        self.next()
        if not items:
            return RDF_NIL
        nodes = [fresh_bnode("l") for _ in items]
        for k, (node, item) in enumerate(zip(nodes, items)):
            self.emit(node, RDF_FIRST, item)
            self.emit(node, RDF_REST, nodes[k + 1] if k + 1 < len(nodes) else RDF_NIL)
        return nodes[0]

    def formula(self) -> Formula:
        open_tok = self.expect("punct", "{")
        if not self.allow_formulas:
            self.error("quoted formulas are not allowed here", open_tok)
        saved_out, saved_bnodes = self.out, self.bnodes
        self.out, self.bnodes = [], {}
        self.formula_depth += 1
        while not self.at("punct", "}"):
            if self.at("eof"):
                self.error("unterminated formula", open_tok)
            self.triples_statement()
            if self.at("punct", "."):
                self.next()
            elif not self.at("punct", "}"):
                self.error(f"expected '.' or '}}', found {self.tok.text!r}")
        self.next()
        self.formula_depth -= 1
        patterns = tuple(self.out)
        self.out, self.bnodes = saved_out, saved_bnodes
        return Formula(patterns)

    # -- statements
    def emit(self, s, p, o):
        self.out.append((s, p, o))

    def predicate_object_list(self, subject):
        while True:
            pred = self.predicate()
            self.object_list(subject, pred)
            if not self.at("punct", ";"):
                return
            while self.at("punct", ";"):
                self.next()
            if self.at("punct", ".") or self.at("punct", "]") or self.at("punct", "}") \
                    or self.at("eof"):
                return

    def object_list(self, subject, pred):
        while True:
            self.emit(subject, pred, self.object())
            if not self.at("punct", ","):
                return
            self.next()

    def triples_statement(self):
        subj = self.subject()
        if isinstance(subj, BNode) and self.at("punct", "."):
            return  # `[ :p :o ] .` on its own
        self.predicate_object_list(subj)


def _check_ground(triples, parser: _Parser):
    graph_triples = []
    for s, p, o in triples:
        if isinstance(s, Literal):
            parser.error(f"literal {s} in subject position")
        if not isinstance(p, IRI):
            parser.error(f"non-IRI predicate {p}")
        graph_triples.append(Triple(s, p, o))
    return graph_triples


def parse_turtle(text: str, base: Optional[str] = None,
                 prefixes: Optional[dict] = None) -> Graph:
    """Parse a Turtle document into a Graph.

    Blank node labels are fresh for every call. Raises TurtleSyntaxError
    with line and column for syntax errors, unknown prefixes and relative
    IRIs that cannot be resolved.
    """
    p = _Parser(text, base, prefixes)
    while not p.at("eof"):
        if p.directive():
            continue
        p.triples_statement()
        p.expect("punct", ".")
    return Graph(_check_ground(p.out, p), p.prefixes)


def parse_n3(text: str, base: Optional[str] = None, prefixes: Optional[dict] = None,
             formula_base: Optional[str] = None) -> N3Document:
    """Parse the N3 subset used for rule programs.

    Top-level statements are either ground triples or ``{ } => { } .`` rules.
    Relative IRIs inside quoted formulas resolve against formula_base when
    given, so request bodies can talk about the resource they are sent to.
    """
    p = _Parser(text, base, prefixes, allow_variables=True, allow_formulas=True,
                formula_base=formula_base)
    doc = N3Document()
    while not p.at("eof"):
        if p.directive():
            continue
        start = p.tok
        if p.at("punct", "{"):
            p.allow_formulas = True
            body = p.formula()
            p.expect("implies")
            head = p.formula()
            p.expect("punct", ".")
            doc.rules.append((body.patterns, head.patterns, start.line))
            continue
        mark = len(p.out)
        p.triples_statement()
        p.expect("punct", ".")
        for s, pred, o in p.out[mark:]:
            if any(isinstance(t, (Variable, Formula)) for t in (s, pred, o)):
                p.error("variables and formulas are only allowed inside rules", start)
        doc.assertions.extend(_check_ground(p.out[mark:], p))
        del p.out[mark:]
    doc.prefixes = p.prefixes
    return doc


def parse_pattern_block(tokens_parser: _Parser) -> list:
    """Parse triple patterns up to the closing brace (used by SPARQL ASK)."""
    p = tokens_parser
    while not p.at("punct", "}"):
        if p.at("eof"):
            p.error("unterminated group pattern")
        if p.at("punct", "{"):
            p.error("nested group patterns are not supported")
        p.triples_statement()
        if p.at("punct", "."):
            p.next()
        elif not p.at("punct", "}"):
            p.error(f"expected '.' or '}}', found {p.tok.text!r}")
    return p.out


# -- writing -----------------------------------------------------------------

_LOCAL_RE = re.compile(r"^[A-Za-z_][\w\-]*$")
_BNODE_LABEL_RE = re.compile(r"[^A-Za-z0-9_]")


def term_to_turtle(term, prefixes: dict, base: Optional[str] = None,
                   used: Optional[dict] = None) -> str:
    if isinstance(term, IRI):
        value = term.value
        if term == RDF_TYPE:
            return "a"
        if base is not None:
            doc = base.split("#", 1)[0]
            if value == doc:
                return "<>"
            if value.startswith(doc + "#"):
                return "<" + value[len(doc):] + ">"
        best = None
        for prefix, ns in prefixes.items():
            if value.startswith(ns) and _LOCAL_RE.match(value[len(ns):]):
                if best is None or len(ns) > len(prefixes[best]):
                    best = prefix
        if best is not None:
            if used is not None:
                used[best] = prefixes[best]
            return f"{best}:{value[len(prefixes[best]):]}"
        return "<" + value.replace(">", "\\u003E") + ">"
    if isinstance(term, BNode):
        return "_:" + _BNODE_LABEL_RE.sub("_", term.label)
    if isinstance(term, Literal):
        if term.datatype == XSD + "integer" and re.fullmatch(r"[+-]?\d+", term.lexical):
            return term.lexical
        if term.datatype == XSD + "boolean" and term.lexical in ("true", "false"):
            return term.lexical
        if term.datatype and not term.lang:
            return '"' + escape_string(term.lexical) + '"^^' + term_to_turtle(
                IRI(term.datatype), prefixes, None, used)
        return str(term)
    if isinstance(term, Variable):
        return str(term)
    if isinstance(term, Formula):
        inner = " ".join(
            " ".join(term_to_turtle(x, prefixes, base, used) for x in pat) + " ."
            for pat in term.patterns)
        return "{ " + inner + " }"
    raise TypeError(f"not a term: {term!r}")


def serialize_turtle(g: Iterable[Triple], prefixes: Optional[dict] = None,
                     base: Optional[str] = None) -> str:
    """Write triples as Turtle, grouped by subject in a stable order.

    IRIs equal to base, or fragments of it, are written as relative
    references so the receiver can resolve them against its own base.
    """
    if prefixes is None:
        prefixes = dict(getattr(g, "prefixes", {}) or {})
    triples = sorted(g, key=Triple.sort_key)
    used = {}
    body = []
    current = None
    for t in triples:
        s = term_to_turtle(t.subject, prefixes, base, used)
        p = term_to_turtle(t.predicate, prefixes, base, used)
        o = term_to_turtle(t.object, prefixes, base, used)
        if t.subject != current:
            if current is not None:
                body[-1] += " ."
            body.append(f"{s} {p} {o}")
            current = t.subject
        else:
            body[-1] += f" ;\n    {p} {o}"
    if body:
        body[-1] += " ."
    head = [f"@prefix {k}: <{v}> ." for k, v in sorted(used.items())]
    return "\n".join(head + ([""] if head and body else []) + body) + ("\n" if head or body else "")
