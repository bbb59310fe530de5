"""Workflow models over Linked Data: vocabulary, validation and the rule program."""
from . import vocab
from .model import (
    ActivityNode, InvalidModel, RequestDescription, Spec, ValidationReport, WorkflowModel,
    atomic, cond, find_models, model_graph, new_instance, par, read_model, seq, validate_model,
)
from .program import (
    DEFAULT_FOLLOW, HOOKS, builtin_derivations, materialize_ask_results, rule_program,
    rule_text, wfp_rules,
)
