"""Tree-structured workflows executed by polling Read-Write Linked Data.

The core pieces: an RDF graph with a Turtle/N3 parser (``rdf``, ``turtle``),
ASK evaluation (``query``), a forward-chaining rule engine (``rules``), an
in-memory LDP server (``ldp``), the polling interpreter (``runtime``), the
workflow vocabulary and rule program (``wild``), the Petri-net oracle
(``petri``) and a building benchmark (``bench``).
"""
from .ldp import LDPServer, audit_transitions
from .petri import PetriNet, compile, conformance, firing_sequences, verify
from .query import ask, parse_ask
from .rdf import IRI, BNode, Graph, Literal, Triple
from .rules import Program, parse_program, saturate
from .runtime import Engine, LocalAccessor, until_state
from .turtle import parse_n3, parse_turtle, serialize_turtle

__version__ = "0.1.0"
