import pytest
from hypothesis import given, strategies as st

from strategies import EX, graphs, iris
from wildflow.rdf import (
    IRI, RDF_FIRST, RDF_NIL, RDF_REST, BNode, Graph, ListNotTerminated, Literal, MalformedList,
    Triple, isomorphic, make_list, merge, read_list, rename_blanks,
)

A, B, X = IRI(EX + "A"), IRI(EX + "B"), IRI(EX + "X")


def test_literal_subject_rejected():
    with pytest.raises((TypeError, ValueError)):
        Triple(Literal("x"), IRI(EX + "p"), A)


def test_make_list_two_members():
    g = Graph()
    head = make_list([A, B], g)
    assert len(g) == 4
    (second,) = g.objects(head, RDF_REST)
    assert g.objects(head, RDF_FIRST) == [A]
    assert g.objects(second, RDF_FIRST) == [B]
    assert g.objects(second, RDF_REST) == [RDF_NIL]


def test_make_list_edge_cases():
    g = Graph()
    assert make_list([], g) == RDF_NIL and len(g) == 0
    head = make_list([X], g)
    assert len(g) == 2 and g.objects(head, RDF_REST) == [RDF_NIL]


def test_read_list():
    g = Graph()
    assert read_list(make_list([A, B], g), g) == [A, B]
    assert read_list(RDF_NIL, g) == []


def test_read_list_unterminated():
    g = Graph()
    head = make_list([A, B], g)
    (second,) = g.objects(head, RDF_REST)
    g.discard(Triple(second, RDF_REST, RDF_NIL))
    with pytest.raises(ListNotTerminated):
        read_list(head, g)


def test_read_list_cycle_and_branch():
    g = Graph()
    n = BNode("n")
    g.add(Triple(n, RDF_FIRST, A))
    g.add(Triple(n, RDF_REST, n))
    with pytest.raises(MalformedList):
        read_list(n, g)
    g = Graph()
    head = make_list([A], g)
    g.add(Triple(head, RDF_FIRST, B))
    with pytest.raises(MalformedList):
        read_list(head, g)


@given(st.lists(iris, max_size=6))
def test_make_read_identity(members):
    g = Graph()
    assert read_list(make_list(members, g), g) == members


def test_merge_renames_clashing_blanks():
    p = IRI(EX + "p")
    a = Graph([Triple(BNode("b"), p, A)])
    b = Graph([Triple(BNode("b"), p, B)])
    m = merge(a, b)
    assert len(m) == 2 and len(m.blank_nodes()) == 2


@given(graphs())
def test_merge_identity_and_idempotence(g):
    assert merge(g, g) == g
    assert merge(g, Graph()) == g


@given(graphs(), graphs(), graphs())
def test_union_laws(a, b, c):
    assert (a | b) == (b | a)
    assert ((a | b) | c) == (a | (b | c))
    assert (a | a) == a


@given(graphs())
def test_isomorphic_under_blank_renaming(g):
    assert isomorphic(g, rename_blanks(g))


def test_not_isomorphic():
    p = IRI(EX + "p")
    a = Graph([Triple(BNode("x"), p, BNode("y"))])
    b = Graph([Triple(BNode("x"), p, BNode("x"))])
    assert not isomorphic(a, b)


def test_graph_index_queries():
    p, q = IRI(EX + "p"), IRI(EX + "q")
    g = Graph([Triple(A, p, B), Triple(A, q, X), Triple(B, p, X)])
    assert g.count(A) == 2 and g.count(None, p) == 2 and g.count(None, None, X) == 2
    assert g.value(A, q) == X and g.value(X, p) is None
    assert Triple(A, p, B) in g and len(list(g.triples(A, p, B))) == 1
    assert list(g.triples(Literal("x"), p, B)) == []
