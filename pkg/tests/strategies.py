"""Hypothesis strategies for small RDF graphs over a tiny vocabulary."""
from hypothesis import strategies as st

from wildflow.rdf import IRI, BNode, Graph, Literal, Triple

EX = "http://example.org/"

iris = st.sampled_from([IRI(EX + n) for n in "abcdef"])
predicates = st.sampled_from([IRI(EX + n) for n in ("p", "q", "r")])
blanks = st.sampled_from([BNode(f"x{i}") for i in range(3)])
literals = st.builds(Literal, st.sampled_from(["on", "off", "1", "héllo", 'a "quoted"\nline']))
subjects = st.one_of(iris, blanks)
objects = st.one_of(iris, blanks, literals)

triples = st.builds(Triple, subjects, predicates, objects)
ground_triples = st.builds(Triple, iris, predicates, st.one_of(iris, literals))


def graphs(max_size: int = 8, ground: bool = False):
    return st.lists(ground_triples if ground else triples, max_size=max_size).map(Graph)
