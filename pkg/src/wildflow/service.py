"""HTTP front end: the LDP server on the wire plus a small JSON API.

Every path outside ``/_wild/`` is an LDP resource or container and speaks
text/turtle. The JSON endpoints under ``/_wild/`` expose the request log,
the state-machine audit, model validation and trace verification so a
thin client does not have to link the library.
"""
from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, Response
from pydantic import BaseModel, Field

from .ldp import LDPServer, audit_transitions
from .petri import compile as compile_net, verify as verify_trace
from .rdf import DEFAULT_PREFIXES, IRI
from .trace import TraceFormatError, completion_trace, parse_trace
from .turtle import TurtleSyntaxError, parse_turtle, serialize_turtle
from .wild.model import InvalidModel, read_model, validate_model
from .wild.program import rule_text


class TransitionModel(BaseModel):
    subject: str
    old: Optional[str] = None
    new: Optional[str] = None


class LogEntryModel(BaseModel):
    seq: int
    time: float
    method: str
    target: str
    status: int
    transitions: list[TransitionModel] = []


class AuditResponse(BaseModel):
    requests: int
    violations: list[str]


class ModelRequest(BaseModel):
    turtle: str = Field(description="workflow model document in Turtle")
    base: str = Field(description="IRI the document is published at")
    model: Optional[str] = Field(None, description="model IRI, if the document has several")


class ValidationResponse(BaseModel):
    model: Optional[str]
    valid: bool
    violations: list[str]
    warnings: list[str]


class VerifyRequest(ModelRequest):
    trace: str = Field(description="trace log, one transition per line")


class VerifyResponse(BaseModel):
    conformant: bool
    trace: list[str]
    position: Optional[int] = None
    expected: list[str] = []
    found: Optional[str] = None
    message: str


class RulesRequest(BaseModel):
    mode: str = "execute"
    seeds: list[str] = []
    follow: Optional[list[str]] = None
    fired_marker: bool = False


class PatchStateRequest(BaseModel):
    target: str
    state: str


def _parse_model(req: ModelRequest):
    try:
        return parse_turtle(req.turtle, base=req.base, prefixes=DEFAULT_PREFIXES)
    except TurtleSyntaxError as exc:
        raise HTTPException(400, f"model does not parse: {exc}") from None


def create_app(server: LDPServer) -> FastAPI:
    app = FastAPI(title="wildflow LDP server", version="0.1.0")
    app.state.ldp = server

    @app.get("/_wild/log", response_model=list[LogEntryModel])
    def request_log(method: Optional[str] = None):
        return [LogEntryModel(seq=e.seq, time=e.time, method=e.method, target=e.target,
                              status=e.status,
                              transitions=[TransitionModel(**t.__dict__) for t in e.transitions])
                for e in server.requests(method)]

    @app.get("/_wild/audit", response_model=AuditResponse)
    def audit():
        log = server.requests()
        return AuditResponse(requests=len(log), violations=audit_transitions(log))

    @app.post("/_wild/validate", response_model=ValidationResponse)
    def validate(req: ModelRequest):
        report = validate_model(_parse_model(req), IRI(req.model) if req.model else None)
        return ValidationResponse(model=getattr(report.model, "value", None), valid=report.ok,
                                  violations=report.violations, warnings=report.warnings)

    @app.post("/_wild/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest):
        g = _parse_model(req)
        try:
            model = read_model(g, IRI(req.model) if req.model else None)
            _, events = parse_trace(req.trace)
        except InvalidModel as exc:
            raise HTTPException(422, str(exc)) from None
        except TraceFormatError as exc:
            raise HTTPException(400, str(exc)) from None
        labels = {n.iri.value for n in model.root.atomic()}
        trace = completion_trace(events, labels)
        verdict = verify_trace(trace, compile_net(model))
        return VerifyResponse(conformant=verdict.conformant, trace=trace,
                              position=verdict.position, expected=list(verdict.expected),
                              found=verdict.found, message=str(verdict))

    @app.post("/_wild/rules", response_class=PlainTextResponse)
    def rules(req: RulesRequest):
        try:
            follow = [IRI(f) for f in req.follow] if req.follow is not None else None
            kwargs = {"follow": follow} if follow is not None else {}
            return rule_text(req.mode, req.seeds, fired_marker=req.fired_marker, **kwargs)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None

    @app.post("/_wild/patch-state")
    def patch_state(req: PatchStateRequest):
        r = server.patch_state(req.target, req.state)
        if not r.ok:
            raise HTTPException(r.status, f"patch of {req.target} refused")
        return {"status": r.status}

    @app.api_route("/{path:path}", methods=["GET", "HEAD", "PUT", "POST", "DELETE"])
    async def ldp(path: str, request: Request):
        target = server.base + path
        method = "GET" if request.method == "HEAD" else request.method
        payload = None
        if method in ("PUT", "POST"):
            payload = (await request.body()).decode("utf-8", errors="replace")
        r = server.handle(method, target, payload,
                          content_type=request.headers.get("content-type", "text/turtle"))
        body = b""
        if r.graph is not None and request.method != "HEAD":
            body = serialize_turtle(r.graph, DEFAULT_PREFIXES, base=target).encode()
        headers = {k: v for k, v in r.headers.items() if k != "Content-Type"}
        return Response(body, status_code=r.status, headers=headers,
                        media_type="text/turtle" if r.graph is not None else None)

    return app
