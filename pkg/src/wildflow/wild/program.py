"""The operational semantics as a rule program (groups I to V).

Rules are generated as N3-subset text and parsed with ``parse_program``,
so ``serialize_program`` and ``rule_text`` give back something a person
can read and run elsewhere. All workflow rules work on activity
instances: wherever the textbook form says ``hasState(a, s)`` for a model
activity ``a``, the generated rule says::

    ?ja :activityInstanceOf ?a ; :inWorkflowInstance ?wi ; :hasState s .

so several instances of one model can run side by side.
"""
from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence

from ..query import UnsupportedQuery, ask
from ..rdf import DEFAULT_PREFIXES, LDP, Graph, IRI, Literal, Triple, TRUE
from ..rules import Hook, Program, parse_program
from ..turtle import TurtleSyntaxError
from . import vocab as W
from .model import condition_query

log = logging.getLogger(__name__)

PREFIXES = """\
@prefix : <http://purl.org/wild/vocab#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix ldp: <http://www.w3.org/ns/ldp#> .
@prefix sp: <http://spinrdf.org/sp#> .
@prefix http: <http://www.w3.org/2011/http#> .
@prefix httpm: <http://www.w3.org/2011/http-methods#> .
"""

DEFAULT_FOLLOW = (IRI(LDP + "contains"), W.workflowInstanceOf)

# -- built-in derivations ----------------------------------------------------

LIST_RULES = """\
{ ?p :hasChildActivities ?l } => { ?p :childListNode ?l } .
{ ?p :childListNode ?l . ?l rdf:rest ?m } => { ?p :childListNode ?m } .
{ ?p :childListNode ?l . ?l rdf:first ?c } => { ?p :hasChildActivity ?c } .
"""

DESCENDANT_RULES = """\
{ ?i :workflowInstanceOf ?m . ?m :hasBehaviour ?a } => { ?i :hasDescendantActivity ?a } .
{ ?i :hasDescendantActivity ?a . ?a :hasChildActivity ?c } => { ?i :hasDescendantActivity ?c } .
"""

RDFS_RULES = """\
{ ?a rdfs:subClassOf ?b . ?b rdfs:subClassOf ?c } => { ?a rdfs:subClassOf ?c } .
{ ?x a ?a . ?a rdfs:subClassOf ?b } => { ?x a ?b } .
{ ?p rdfs:subPropertyOf ?q . ?q rdfs:subPropertyOf ?r } => { ?p rdfs:subPropertyOf ?r } .
{ ?x ?p ?y . ?p rdfs:subPropertyOf ?q } => { ?x ?q ?y } .
{ ?x ?p ?y . ?p rdfs:domain ?c } => { ?x a ?c } .
{ ?x ?p ?y . ?p rdfs:range ?c } => { ?y a ?c } .
{ ?x ?p ?y . ?p owl:inverseOf ?q } => { ?y ?q ?x } .
{ ?x ?q ?y . ?p owl:inverseOf ?q } => { ?y ?p ?x } .
"""


def builtin_derivations(rdfs: bool = True) -> list:
    """List membership, descendant closure and (optionally) RDFS + inverse rules."""
    text = PREFIXES + LIST_RULES + DESCENDANT_RULES + (RDFS_RULES if rdfs else "")
    return parse_program(text).derivations


def materialize_ask_results(wm: Graph) -> list[Triple]:
    """sp:hasBooleanResult true for every referenced condition whose ASK holds in wm.

    Conditions that do not hold get no triple at all, which keeps this
    monotone: more data can only add results.
    """
    out = []
    owners = {}
    for prop in (W.hasPostcondition, W.hasPrecondition):
        for t in wm.triples(None, prop, None):
            owners.setdefault(t.object, t.subject)
    for c in sorted(owners, key=lambda t: t.sort_key()):
        if isinstance(c, Literal) or Triple(c, W.hasBooleanResult, TRUE) in wm:
            continue
        try:
            q = condition_query(wm, c, owners[c])
        except (TurtleSyntaxError, UnsupportedQuery) as exc:
            log.warning("condition %s does not parse: %s", c, exc)
            continue
        if q is not None and ask(q, wm):
            out.append(Triple(c, W.hasBooleanResult, TRUE))
    return out


HOOKS: tuple[Hook, ...] = (materialize_ask_results,)

# -- rule groups -------------------------------------------------------------


def _iri(term) -> str:
    value = term.value if isinstance(term, IRI) else str(term)
    return f"<{value}>"


def _get(target: str) -> str:
    return f"[] http:mthd httpm:GET ; http:requestURI {target}"


def _put(target: str, body: str) -> str:
    return f"[] http:mthd httpm:PUT ; http:requestURI {target} ; http:body {{ {body} }}"


def _inst(var: str, activity: str, state: Optional[str] = None) -> str:
    """Triple patterns for an instance of activity in workflow instance ?wi."""
    out = f"{var} :activityInstanceOf {activity} ; :inWorkflowInstance ?wi"
    return out + (f" ; :hasState {state} ." if state else " .")


def _rule(body: str, head: str) -> str:
    return f"{{ {body} }}\n  => {{ {head} }} .\n"


def retrieval_rules(seeds: Iterable, follow: Sequence = DEFAULT_FOLLOW) -> str:
    """Group I: GET the seeds, then follow links from what is known."""
    text = "# I. retrieve state\n"
    for seed in seeds:
        text += _rule("", _get(_iri(seed)))
    for pred in follow:
        text += _rule(f"?x {_iri(pred)} ?y", _get("?y"))
    return text


def init_rules() -> str:
    """Group II: initialise uninitialised workflow instances.

    Activity instances are POSTed into the container that holds the
    workflow instance, so one program serves any number of containers.
    """
    uninit = ("?c ldp:contains ?i . ?i a :WorkflowInstance ; :hasState :uninitialised ; "
              ":workflowInstanceOf ?m . ")
    post = ("[] http:mthd httpm:POST ; http:requestURI ?c ; http:body "
            "{ <#it> a :ActivityInstance ; :activityInstanceOf ?a ; :inWorkflowInstance ?i ; "
            ":hasState STATE . }")
    return (
        "# II.1 create the root activity's instance, already active\n"
        + _rule(uninit + "?m :hasBehaviour ?a", post.replace("STATE", ":active"))
        + "# II.2 set the workflow instance initialised\n"
        + _rule(uninit + "?m :hasBehaviour ?a",
                _put("?i", "?i a :WorkflowInstance ; :hasState :initialised ; "
                           ":workflowInstanceOf ?m ."))
        + "# II.3 create instances of all other activities, initialised\n"
        + _rule(uninit + "?i :hasDescendantActivity ?p . ?p :hasChildActivity ?a",
                post.replace("STATE", ":initialised"))
        + "# II.4 an initialised workflow instance whose root instance exists is active\n"
        + _rule("?i a :WorkflowInstance ; :hasState :initialised ; :workflowInstanceOf ?m . "
                "?m :hasBehaviour ?a . ?j :activityInstanceOf ?a ; :inWorkflowInstance ?i",
                _put("?i", "?i a :WorkflowInstance ; :hasState :active ; :workflowInstanceOf ?m ."))
    )


FINALISE_RULES = (
    "# III. the root activity's instance is done, so is the workflow instance\n"
    + _rule("?wi a :WorkflowInstance ; :hasState :active ; :workflowInstanceOf ?m . "
            "?m :hasBehaviour ?a . " + _inst("?j", "?a", ":done"),
            _put("?wi", "?wi a :WorkflowInstance ; :hasState :done ; :workflowInstanceOf ?m ."))
)

OBSERVE_RULES = (
    "# IV.2 an active atomic activity whose postcondition holds is done\n"
    + _rule("?wi a :WorkflowInstance ; :hasState :active ; :workflowInstanceOf ?m . "
            "?wi :hasDescendantActivity ?a . ?a a :AtomicActivity ; :hasPostcondition ?p . "
            "?j a :ActivityInstance . " + _inst("?j", "?a", ":active")
            + " ?p sp:hasBooleanResult true",
            _put("?j", "?j :activityInstanceOf ?a ; :inWorkflowInstance ?wi ; "
                       ":hasState :done ."))
)

_ACTIVE_WI = "?wi :hasState :active . "

# (name, body, activated instance variable, activated activity variable)
ACTIVATIONS = [
    ("WFP1 first child of an active sequence",
     "?s a :SequentialActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivities ?l . ?l rdf:first ?a . " + _inst("?ja", "?a", ":initialised"),
     "?ja", "?a"),
    ("WFP1 advance to the next child",
     "?s a :SequentialActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivity ?c . " + _inst("?jc", "?c", ":done")
     + " ?l rdf:first ?c ; rdf:rest ?r . ?r rdf:first ?a . " + _inst("?ja", "?a", ":initialised"),
     "?ja", "?a"),
    ("WFP2 parallel split",
     "?s a :ParallelActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivity ?a . " + _inst("?ja", "?a", ":initialised"),
     "?ja", "?a"),
    ("WFP4 exclusive choice",
     "?s a :ConditionalActivity . " + _inst("?js", "?s", ":active")
     + " ?s :childListNode ?l . ?l rdf:first ?last ; rdf:rest rdf:nil . "
     + _inst("?jl", "?last", ":initialisedFromListItemOne")
     + " ?s :hasChildActivity ?a . ?a :hasPrecondition ?p . ?p sp:hasBooleanResult true . "
     + _inst("?ja", "?a", ":initialised"),
     "?ja", "?a"),
]

COMPLETIONS = [
    ("WFP1 sequence done after its last child",
     "?s a :SequentialActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivity ?c . " + _inst("?jc", "?c", ":done")
     + " ?s :childListNode ?l . ?l rdf:first ?c ; rdf:rest rdf:nil ."),
    ("WFP3 parallel done once the done-marker reached the last child",
     "?s a :ParallelActivity . " + _inst("?js", "?s", ":active")
     + " ?s :childListNode ?l . ?l rdf:first ?c ; rdf:rest rdf:nil . "
     + _inst("?jc", "?c", ":doneFromListItemOne")),
    ("WFP5 simple merge",
     "?s a :ConditionalActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivity ?c . " + _inst("?jc", "?c", ":done")),
]

MARKERS = [
    ("WFP3 first child done",
     "?s a :ParallelActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivities ?l . ?l rdf:first ?c . " + _inst("?jc", "?c", ":done"),
     "?jc :hasState :doneFromListItemOne ."),
    ("WFP3 done-marker moves to a done successor",
     "?s a :ParallelActivity . " + _inst("?js", "?s", ":active")
     + " ?s :childListNode ?l . ?l rdf:first ?c ; rdf:rest ?r . ?r rdf:first ?d . "
     + _inst("?jc", "?c", ":doneFromListItemOne") + " " + _inst("?jd", "?d", ":done"),
     "?jd :hasState :doneFromListItemOne ."),
    ("WFP4 first child initialised",
     "?s a :ConditionalActivity . " + _inst("?js", "?s", ":active")
     + " ?s :hasChildActivities ?l . ?l rdf:first ?c . " + _inst("?jc", "?c", ":initialised"),
     "?jc :hasState :initialisedFromListItemOne ."),
    ("WFP4 initialised-marker moves to an initialised successor",
     "?s a :ConditionalActivity . " + _inst("?js", "?s", ":active")
     + " ?s :childListNode ?l . ?l rdf:first ?c ; rdf:rest ?r . ?r rdf:first ?d . "
     + _inst("?jc", "?c", ":initialisedFromListItemOne") + " "
     + _inst("?jd", "?d", ":initialised"),
     "?jd :hasState :initialisedFromListItemOne ."),
]


def wfp_rules() -> str:
    """Group V: the five basic workflow patterns, on activity instances."""
    text = "# V. advance composite activities\n"
    for name, body, target, _ in ACTIVATIONS:
        text += f"# {name}\n" + _rule(_ACTIVE_WI + body,
                                      _put(target, f"{target} :hasState :active ."))
    for name, body in COMPLETIONS:
        text += f"# {name}\n" + _rule(_ACTIVE_WI + body, _put("?js", "?js :hasState :done ."))
    for name, body, head in MARKERS:
        text += f"# {name}\n" + _rule(_ACTIVE_WI + body, head)
    return text


_REQUEST_HEADS = {
    "GET": "[] http:mthd httpm:GET ; http:requestURI ?u",
    "DELETE": "[] http:mthd httpm:DELETE ; http:requestURI ?u",
    "PUT": "[] http:mthd httpm:PUT ; http:requestURI ?u ; http:body ?b",
    "POST": "[] http:mthd httpm:POST ; http:requestURI ?u ; http:body ?b",
}


def _request_body(method: str, activity: str) -> str:
    body = (f" {activity} a :AtomicActivity ; :hasHttpRequest ?h . "
            f"?h http:mthd httpm:{method} ; http:requestURI ?u")
    return body + (" ; http:body ?b ." if method in ("PUT", "POST") else " .")


def execute_rules(fired_marker: bool = False) -> str:
    """IV.1: fire the HTTP request of atomic activities.

    By default the request goes out in every cycle in which the activity's
    instance is active (at-least-once; targets must be idempotent). With
    fired_marker the request is instead attached to the rules that switch
    an instance to active, so it goes out in that one cycle only.
    """
    text = "# IV.1 execute atomic activities\n"
    for method, head in _REQUEST_HEADS.items():
        if not fired_marker:
            body = ("?wi a :WorkflowInstance ; :hasState :active . "
                    + _inst("?j", "?a", ":active") + _request_body(method, "?a"))
            text += _rule(body, head)
            continue
        for name, act_body, _, activity in ACTIVATIONS:
            text += f"# {method} on {name}\n"
            text += _rule(_ACTIVE_WI + act_body + _request_body(method, activity), head)
        # an atomic root is created active by II.1
        root = ("?wi a :WorkflowInstance ; :hasState :uninitialised ; :workflowInstanceOf ?m . "
                "?m :hasBehaviour ?a .")
        text += f"# {method} on an atomic root\n" + _rule(root + _request_body(method, "?a"), head)
    return text


def rule_text(mode: str = "execute", seeds: Iterable = (), follow: Sequence = DEFAULT_FOLLOW, fired_marker: bool = False,
              rdfs: bool = True) -> str:
    """The complete program as N3-subset text; see ``rule_program``."""
    if mode not in ("monitor", "execute"):
        raise ValueError(f"mode must be monitor or execute, not {mode!r}")
    seeds = list(seeds)
    text = PREFIXES + "\n"
    if seeds:
        text += retrieval_rules(seeds, follow)
    text += "# built-in derivations\n" + LIST_RULES + DESCENDANT_RULES
    if rdfs:
        text += RDFS_RULES
    text += init_rules()
    text += FINALISE_RULES + OBSERVE_RULES + wfp_rules()
    if mode == "execute":
        text += execute_rules(fired_marker)
    return text


def rule_program(mode: str = "execute", seeds: Iterable = (), follow: Sequence = DEFAULT_FOLLOW, fired_marker: bool = False,
                 rdfs: bool = True, ontology: bool = True,
                 extra_assertions: Optional[Graph] = None) -> Program:
    """Generate the rule program for monitor or execute mode.

    seeds are GET unconditionally in every cycle; links along the follow
    predicates are dereferenced from there. Workflow instances are found
    as members of any container the program reads.
    The ontology, when included, feeds the RDFS rules.
    """
    program = parse_program(rule_text(mode, seeds, follow, fired_marker, rdfs))
    if ontology:
        program.assertions.add_all(W.ontology())
    if extra_assertions is not None:
        program.assertions.add_all(extra_assertions)
    program.prefixes = dict(DEFAULT_PREFIXES)
    return program
