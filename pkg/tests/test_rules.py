import pytest
from hypothesis import given, settings, strategies as st

from strategies import EX, graphs, iris, predicates
from wildflow.query import TriplePattern, Variable
from wildflow.rdf import DEFAULT_PREFIXES, IRI, LDP, Graph, Triple
from wildflow.rules import (
    DerivationRule, HttpRequest, RequestRule, UnsafeRule, fire_request_rules, parse_program,
    saturate, saturate_naive, serialize_program,
)
from wildflow.wild import vocab as W
from wildflow.wild.program import LIST_RULES, PREFIXES

X, Y, Z = Variable("x"), Variable("y"), Variable("z")
P = IRI(EX + "p")
CONTAINS = IRI(LDP + "contains")


@st.composite
def rules(draw):
    body_vars = [X, Y, Z]
    terms = st.one_of(st.sampled_from(body_vars), iris)
    body = draw(st.lists(st.builds(TriplePattern, terms, predicates, terms), min_size=1, max_size=2))
    bound = sorted({t for p in body for t in p if isinstance(t, Variable)}, key=lambda v: v.name)
    head_terms = st.one_of(st.sampled_from(bound), iris) if bound else iris
    head = [draw(st.builds(TriplePattern, head_terms, predicates, head_terms))]
    return DerivationRule(tuple(body), tuple(head))


programs = st.lists(rules(), max_size=6)


def chain(n):
    return Graph(Triple(IRI(f"{EX}n{i}"), P, IRI(f"{EX}n{i + 1}")) for i in range(n - 1))


TRANSITIVE = parse_program("@prefix ex: <http://example.org/> . "
                           "{ ?x ex:p ?y . ?y ex:p ?z } => { ?x ex:p ?z } .").derivations


def test_transitive_closure_of_chain():
    out = saturate(chain(6), TRANSITIVE)
    assert len(out) == 15
    assert out == saturate_naive(chain(6), TRANSITIVE)


def test_no_rules_identity():
    g = chain(4)
    assert saturate(g, []) == g


def test_list_membership_rules():
    program = parse_program(PREFIXES + LIST_RULES)
    g = Graph()
    from wildflow.rdf import make_list
    root = IRI("http://example.org/m#root")
    g.add(Triple(root, W.hasChildActivities, make_list(
        [IRI("http://example.org/m#A"), IRI("http://example.org/m#B")], g)))
    out = saturate(g, program.derivations)
    assert Triple(root, W.hasChildActivity, IRI("http://example.org/m#A")) in out
    assert Triple(root, W.hasChildActivity, IRI("http://example.org/m#B")) in out


@settings(max_examples=200, deadline=None)
@given(programs, graphs(max_size=30, ground=True))
def test_semi_naive_equals_naive(rs, g):
    assert saturate(g, rs) == saturate_naive(g, rs)


@settings(max_examples=200, deadline=None)
@given(programs, graphs(max_size=30, ground=True), st.randoms(use_true_random=False))
def test_saturate_laws(rs, g, rng):
    out = saturate(g, rs)
    assert g <= out  # extensive
    assert saturate(out, rs) == out  # idempotent
    shuffled_rules = list(rs)
    rng.shuffle(shuffled_rules)
    triples = g.sorted()
    rng.shuffle(triples)
    assert saturate(Graph(triples), shuffled_rules) == out  # order independent


@given(programs, graphs(max_size=15, ground=True), graphs(max_size=15, ground=True))
def test_saturate_monotone(rs, a, b):
    assert saturate(a, rs) <= saturate(a | b, rs)


def test_parse_get_rule():
    program = parse_program("@prefix ldp: <http://www.w3.org/ns/ldp#> . "
                            "@prefix http: <http://www.w3.org/2011/http#> . "
                            "@prefix httpm: <http://www.w3.org/2011/http-methods#> . "
                            "{ ?c ldp:contains ?e } => { [] http:mthd httpm:GET ; http:requestURI ?e } .")
    assert len(program.requests) == 1 and not program.derivations
    (rule,) = program.requests
    assert rule.method == "GET"


def test_empty_program():
    program = parse_program("")
    assert len(program) == 0


def test_unsafe_rules_rejected():
    with pytest.raises(UnsafeRule):
        parse_program("@prefix : <http://e/> . { ?x :p ?y } => { ?x :q ?z } .")
    with pytest.raises(UnsafeRule):
        RequestRule((TriplePattern(X, P, Y),), "GET", Z)


def container(n):
    c = IRI(EX + "ldpc")
    return Graph(Triple(c, CONTAINS, IRI(f"{EX}m{i}")) for i in range(n))


GET_MEMBERS = RequestRule((TriplePattern(Variable("c"), CONTAINS, Variable("e")),), "GET", Variable("e"))


def test_fire_container_members():
    reqs = fire_request_rules(container(3), [GET_MEMBERS])
    assert len(reqs) == 3 and {r.method for r in reqs} == {"GET"}


def test_fire_no_match():
    assert fire_request_rules(Graph(), [GET_MEMBERS]) == set()


def test_duplicate_requests_collapse():
    g = container(1) | Graph([Triple(IRI(EX + "other"), CONTAINS, IRI(EX + "m0"))])
    assert fire_request_rules(g, [GET_MEMBERS]) == {HttpRequest("GET", IRI(EX + "m0"))}


def test_method_filter():
    put = RequestRule((TriplePattern(Variable("c"), CONTAINS, Variable("e")),), "PUT", Variable("e"),
                      payload=((Variable("e"), P, Variable("c")),))
    g = container(2)
    assert len(fire_request_rules(g, [GET_MEMBERS, put], "GET")) == 2
    non_get = fire_request_rules(g, [GET_MEMBERS, put], "non-GET")
    assert len(non_get) == 2 and all(r.method == "PUT" and len(r.payload) == 1 for r in non_get)


@given(st.randoms(use_true_random=False))
def test_fire_order_independent(rng):
    triples = container(5).sorted()
    rng.shuffle(triples)
    assert fire_request_rules(Graph(triples), [GET_MEMBERS]) == \
        fire_request_rules(container(5), [GET_MEMBERS])


def test_serialize_round_trip():
    text = PREFIXES + LIST_RULES
    program = parse_program(text)
    again = parse_program(serialize_program(program, DEFAULT_PREFIXES))
    assert len(again.derivations) == len(program.derivations)
    assert {(r.body, r.head) for r in again.derivations} == \
        {(r.body, r.head) for r in program.derivations}
