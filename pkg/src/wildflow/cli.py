"""Command line: serve, run, verify, validate, bench.

Exit codes: 0 success, 1 validation failure (or a non-conformant trace),
2 timeout, 3 transport or bind failure.
"""
from __future__ import annotations

import configparser
import logging
import socket
import sys
from pathlib import Path

import click

from .rdf import DEFAULT_PREFIXES, IRI, rebase
from .rules import NULL_BASE
from .turtle import TurtleSyntaxError, parse_turtle
from .wild import vocab as W
from .wild.model import find_models, new_instance, read_model, validate_model

EXIT_OK, EXIT_INVALID, EXIT_TIMEOUT, EXIT_TRANSPORT = 0, 1, 2, 3


def read_config(path: str) -> dict[str, str]:
    """key = value lines, ``#`` comments; no sections needed."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string("[wildflow]\n" + Path(path).read_text())
    return {k.replace("-", "_"): v for k, v in parser["wildflow"].items()}


def _apply_config(ctx: click.Context, params: dict) -> dict:
    """Overlay the --config file on the flags. Config values win."""
    path = params.pop("config", None)
    if not path:
        return params
    options = {}
    for p in ctx.command.params:
        if isinstance(p, click.Option):
            options.update({o.lstrip("-").replace("-", "_"): p for o in p.opts if o.startswith("--")})
    for key, raw in read_config(path).items():
        opt = options.get(key)
        if opt is None or key == "config":
            raise click.BadParameter(f"unknown key {key!r}", param_hint=f"config file {path}")
        if opt.multiple:
            value = tuple(opt.type.convert(v, opt, ctx) for v in raw.replace(",", " ").split())
        elif opt.is_flag:
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            value = opt.type.convert(raw.strip(), opt, ctx)
        params[opt.name] = value
    return params


def _load_model(path: str, base: str):
    text = Path(path).read_text()
    try:
        return parse_turtle(text, base=base, prefixes=DEFAULT_PREFIXES)
    except TurtleSyntaxError as exc:
        raise click.ClickException(f"{path}: {exc}") from None


def _validate_or_exit(g, path: str):
    report = validate_model(g)
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    if not report.ok:
        for v in report.violations:
            click.echo(f"invalid: {v}", err=True)
        click.echo(f"{path}: model is invalid", err=True)
        sys.exit(EXIT_INVALID)
    return report


@click.group()
@click.option("-v", "--verbose", count=True, help="more logging (repeatable)")
def main(verbose: int):
    """Run tree-structured workflows over Read-Write Linked Data."""
    level = logging.WARNING - 10 * verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--base", help="base IRI of served resources [default: http://HOST:PORT/]")
@click.option("--container", "containers", multiple=True,
              help="extra container path (repeatable); instances/ and models/ always exist")
@click.argument("data", nargs=-1)
def serve(host, port, base, containers, data):
    """Serve an LDP server; DATA are Turtle files, optionally as PATH=FILE."""
    import uvicorn

    from .ldp import LDPServer
    from .service import create_app

    base = base or f"http://{host}:{port}/"
    server = LDPServer(base, dict.fromkeys(("instances/", "models/", *containers)))
    for item in data:
        path, _, file = item.rpartition("=")
        path = path or Path(file).stem
        try:
            server.load(path, parse_turtle(Path(file).read_text(), base=server.iri(path),
                                           prefixes=DEFAULT_PREFIXES))
        except (OSError, TurtleSyntaxError) as exc:
            raise click.ClickException(f"{file}: {exc}") from None
        click.echo(f"loaded {server.iri(path)}", err=True)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        click.echo(f"cannot bind {host}:{port}: {exc.strerror or exc}", err=True)
        sys.exit(EXIT_TRANSPORT)
    config = uvicorn.Config(create_app(server), log_level="warning")
    click.echo(f"serving {base} on {host}:{sock.getsockname()[1]}", err=True)
    uvicorn.Server(config).run(sockets=[sock])


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--server", default="http://127.0.0.1:8000/", show_default=True,
              help="LDP server that stores the model and the instances")
@click.option("--container", help="instance container IRI [default: SERVER/instances/]")
@click.option("--seed", "seeds", multiple=True, help="world resource to GET each cycle (repeatable)")
@click.option("--follow", multiple=True, help="link predicate to follow (repeatable)")
@click.option("--mode", type=click.Choice(["monitor", "execute"]), default="execute",
              show_default=True)
@click.option("--interval", type=float, default=0.5, show_default=True, help="polling interval in s")
@click.option("--timeout", type=float, default=60.0, show_default=True)
@click.option("--fired-marker/--no-fired-marker", default=False,
              help="fire each request once, in the cycle its activity becomes active")
@click.option("--trace", "trace_file", type=click.Path(dir_okay=False),
              help="write the trace here instead of stdout")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="key = value file overriding the flags")
@click.pass_context
def run(ctx, **params):
    """Publish MODEL_FILE, inject one instance and run it to completion."""
    import httpx

    from .runtime import Engine, HttpxAccessor, LoopTimeout, TransportError, until_state
    from .trace import TraceEvent, format_trace
    from .wild.program import DEFAULT_FOLLOW, HOOKS, rule_program

    p = _apply_config(ctx, params)
    if not p["interval"] > 0:
        raise click.BadParameter("must be positive", param_hint="--interval")
    server = p["server"] if p["server"].endswith("/") else p["server"] + "/"
    container = p["container"] or server + "instances/"
    if not container.startswith(("http://", "https://")):
        raise click.BadParameter("must be an absolute IRI", param_hint="--container")
    doc = f"{server}models/{Path(p['model_file']).stem}"
    g = _load_model(p["model_file"], doc)
    report = _validate_or_exit(g, p["model_file"])
    model = report.model

    follow = tuple(IRI(f) for f in p["follow"]) or DEFAULT_FOLLOW
    program = rule_program(p["mode"], (container, *p["seeds"]), follow=follow,
                           fired_marker=p["fired_marker"])
    events: list = []
    with httpx.Client() as client:
        http = HttpxAccessor(client)
        try:
            r = http("PUT", doc, rebase(g, doc, NULL_BASE))
            if not r.ok:
                raise TransportError(f"PUT {doc} answered {r.status}")
            r = http("POST", container, new_instance(model))
            if not r.ok or not r.location:
                raise TransportError(f"POST {container} answered {r.status}")
        except TransportError as exc:
            click.echo(f"transport error: {exc}", err=True)
            sys.exit(EXIT_TRANSPORT)
        instance = r.location
        click.echo(f"instance {instance}", err=True)
        engine = Engine(program, http, HOOKS)
        status = EXIT_OK
        try:
            reports = engine.run_loop(p["interval"], until_state(instance, W.done),
                                      timeout=p["timeout"])
        except LoopTimeout as exc:
            reports = exc.reports
            click.echo(f"timeout: {exc}", err=True)
            status = EXIT_TIMEOUT
        for rep in reports:
            events += [TraceEvent.from_change(c) for c in rep.transitions
                       if c.workflow_instance == instance]
    out = format_trace(events, model.value)
    if p["trace_file"]:
        Path(p["trace_file"]).write_text(out)
    else:
        click.echo(out, nl=False)
    click.echo(f"{len(reports)} cycles", err=True)
    sys.exit(status)


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--base", help="IRI the model document is published at [default: the file URI]")
def validate(model_file, base):
    """Check MODEL_FILE against the structural rules of workflow models."""
    base = base or Path(model_file).resolve().as_uri()
    g = _load_model(model_file, base)
    report = _validate_or_exit(g, model_file)
    click.echo(f"{model_file}: valid model {report.model.value}")


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("trace_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--base", help="IRI the model document is published at "
                             "[default: taken from the trace header, else the file URI]")
def verify(model_file, trace_file, base):
    """Check that TRACE_FILE is a firing sequence of MODEL_FILE's Petri net."""
    from .petri import compile as compile_net, verify as check
    from .trace import TraceFormatError, completion_trace, parse_trace

    try:
        header, events = parse_trace(Path(trace_file).read_text())
    except TraceFormatError as exc:
        raise click.ClickException(f"{trace_file}: {exc}") from None
    if base is None:
        base = header.split("#", 1)[0] if header else Path(model_file).resolve().as_uri()
    g = _load_model(model_file, base)
    _validate_or_exit(g, model_file)
    chosen = IRI(header) if header and IRI(header) in find_models(g) else None
    model = read_model(g, chosen)
    labels = {n.iri.value for n in model.root.atomic()}
    trace = completion_trace(events, labels)
    verdict = check(trace, compile_net(model))
    click.echo(str(verdict))
    sys.exit(EXIT_OK if verdict.conformant else EXIT_INVALID)


@main.command()
@click.option("--buildings", default="1,2,5,10", show_default=True,
              help="comma separated building counts")
@click.option("--workload", "workloads", multiple=True,
              help="W1..W5 (repeatable) [default: all]")
@click.option("--rooms", type=int, default=2, show_default=True)
@click.option("--lights", type=int, default=1, show_default=True)
@click.option("--interval", type=float, default=0.2, show_default=True,
              help="seconds between instance injections")
@click.option("--warmup", type=float, default=0.0, show_default=True)
@click.option("--timeout", type=float, default=300.0, show_default=True)
@click.option("--repeat", type=int, default=1, show_default=True,
              help="runs per cell; the fastest is reported")
@click.option("--mode", type=click.Choice(["monitor", "execute"]), default="execute",
              show_default=True)
@click.option("--fired-marker/--no-fired-marker", default=False)
@click.option("--latency", type=float, default=0.0, show_default=True,
              help="simulated device latency per request in s")
@click.option("--sep", default="\t", help="column separator [default: tab]")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="key = value file overriding the flags")
@click.pass_context
def bench(ctx, **params):
    """Run the building benchmark and print a runtime and request table."""
    from .bench import NAMES, BenchTimeout, BuildingSpec, format_table, sweep

    p = _apply_config(ctx, params)
    try:
        scales = [int(n) for n in str(p["buildings"]).split(",") if n.strip()]
    except ValueError:
        raise click.BadParameter("expected integers", param_hint="--buildings") from None
    names = p["workloads"] or NAMES
    unknown = set(names) - set(NAMES)
    if unknown:
        raise click.BadParameter(f"unknown workload {sorted(unknown)[0]}", param_hint="--workload")
    try:
        results = sweep(scales, names, repeat=p["repeat"],
                        spec=BuildingSpec(rooms=p["rooms"], lights=p["lights"]),
                        interval=p["interval"], warmup=p["warmup"], timeout=p["timeout"],
                        mode=p["mode"], fired_marker=p["fired_marker"], latency=p["latency"])
    except BenchTimeout as exc:
        click.echo(f"timeout: {exc}", err=True)
        sys.exit(EXIT_TIMEOUT)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    sep = p["sep"].encode().decode("unicode_escape")
    click.echo(format_table(results, sep), nl=False)
    bad = [v for r in results.values() for v in r.violations]
    for v in bad:
        click.echo(f"state violation: {v}", err=True)
    sys.exit(EXIT_INVALID if bad else EXIT_OK)


if __name__ == "__main__":  # pragma: no cover
    main()
