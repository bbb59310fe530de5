"""Terms of the workflow ontology and the ontology document itself."""
from __future__ import annotations

from importlib import resources

from ..rdf import HTTP, RDF, SP, WILD, IRI, Graph, Namespace
from ..turtle import parse_turtle

NS = Namespace(WILD)

WorkflowModel = NS.WorkflowModel
WorkflowInstance = NS.WorkflowInstance
ActivityInstance = NS.ActivityInstance
Activity = NS.Activity
CompositeActivity = NS.CompositeActivity
AtomicActivity = NS.AtomicActivity
SequentialActivity = NS.SequentialActivity
ParallelActivity = NS.ParallelActivity
ConditionalActivity = NS.ConditionalActivity

hasBehaviour = NS.hasBehaviour
hasChildActivities = NS.hasChildActivities
hasChildActivity = NS.hasChildActivity
hasDescendantActivity = NS.hasDescendantActivity
hasState = NS.hasState
workflowInstanceOf = NS.workflowInstanceOf
activityInstanceOf = NS.activityInstanceOf
inWorkflowInstance = NS.inWorkflowInstance
hasPostcondition = NS.hasPostcondition
hasPrecondition = NS.hasPrecondition
hasHttpRequest = NS.hasHttpRequest
childListNode = NS.childListNode  # derivation helper: list nodes of a child list

hasBooleanResult = IRI(SP + "hasBooleanResult")
sp_text = IRI(SP + "text")
sp_Ask = IRI(SP + "Ask")
http_mthd = IRI(HTTP + "mthd")
http_requestURI = IRI(HTTP + "requestURI")
http_body = IRI(HTTP + "body")

uninitialised = NS.uninitialised
initialised = NS.initialised
active = NS.active
done = NS.done
doneFromListItemOne = NS.doneFromListItemOne
initialisedFromListItemOne = NS.initialisedFromListItemOne

STATES = (uninitialised, initialised, active, done)
MARKERS = (doneFromListItemOne, initialisedFromListItemOne)
KINDS = {
    AtomicActivity: "atomic",
    SequentialActivity: "sequential",
    ParallelActivity: "parallel",
    ConditionalActivity: "conditional",
}

ONTOLOGY_IRI = "http://purl.org/wild/vocab"


def ontology_text() -> str:
    return resources.files(__package__).joinpath("ontology.ttl").read_text(encoding="utf-8")


def ontology() -> Graph:
    return parse_turtle(ontology_text(), base=ONTOLOGY_IRI)
