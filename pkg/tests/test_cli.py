import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

import httpx
from click.testing import CliRunner

from conftest import free_port
from wildflow.cli import main, read_config
from wildflow.trace import parse_trace

DATA = Path(__file__).parent / "data"
FIG2 = str(DATA / "fig2.ttl")
LAMP = (DATA / "lamp.ttl").read_text()


def world(live_server):
    ldp = live_server()
    ldp.load("devices/a", LAMP)
    ldp.load("devices/b", LAMP)
    return ldp


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_run_fig2(live_server, tmp_path):
    ldp = world(live_server)
    out = tmp_path / "trace.tsv"
    r = invoke("run", FIG2, "--server", ldp.base, "--seed", ldp.base + "devices/",
               "--interval", 0.01, "--timeout", 30, "--trace", out)
    assert r.exit_code == 0, r.output
    model, events = parse_trace(out.read_text())
    assert model == ldp.base + "models/fig2#wfm"
    done = [e.activity.rsplit("#", 1)[1] for e in events if e.new == "done" and e.old == "active"]
    assert done == ["A", "B", "root", "wfm"]

    # every printed transition is exactly one accepted write on the server
    logged = Counter((e.target, t.subject, t.old, t.new) for e in ldp.log
                     if e.method in ("PUT", "POST") and 200 <= e.status < 300
                     for t in e.transitions if t.new is not None)
    state = "http://purl.org/wild/vocab#"
    for ev in events:
        key = (ev.instance, ev.old and state + ev.old, state + ev.new)
        matches = [k for k in logged if (k[1], k[2], k[3]) == key]
        assert len(matches) == 1 and logged[matches[0]] == 1, ev

    verdict = invoke("verify", FIG2, out)
    assert verdict.exit_code == 0 and verdict.output.strip() == "conformant"


def test_run_rejects_open_list_before_any_request(live_server):
    ldp = world(live_server)
    r = invoke("run", DATA / "fig2-open.ttl", "--server", ldp.base)
    assert r.exit_code == 1 and "non-terminated list" in r.output
    assert ldp.log == []


def test_run_transport_error():
    r = invoke("run", FIG2, "--server", f"http://127.0.0.1:{free_port()}/", "--timeout", 1)
    assert r.exit_code == 3 and "transport error" in r.output


def test_run_timeout_with_unreachable_seed(live_server, tmp_path):
    ldp = live_server()  # no lamps: postconditions never hold
    r = invoke("run", FIG2, "--server", ldp.base, "--seed", "http://127.0.0.1:9/nothing",
               "--interval", 0.01, "--timeout", 0.5, "--trace", tmp_path / "t")
    assert r.exit_code == 2 and "timeout" in r.output
    assert "cycles" in r.output and (tmp_path / "t").exists()


def test_config_overrides_flags(live_server, tmp_path):
    ldp = world(live_server)
    cfg = tmp_path / "run.conf"
    cfg.write_text(f"# engine settings\nserver = {ldp.base}\nseed = {ldp.base}devices/\n"
                   "interval = 0.01\ntimeout = 30\nfired-marker = yes\n")
    assert read_config(cfg)["fired_marker"] == "yes"
    r = invoke("run", FIG2, "--server", "http://127.0.0.1:9/", "--interval", 5, "--config", cfg)
    assert r.exit_code == 0, r.output
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    assert invoke("run", FIG2, "--config", bad).exit_code == 2


def test_validate():
    assert invoke("validate", FIG2).exit_code == 0
    r = invoke("validate", DATA / "fig2-open.ttl")
    assert r.exit_code == 1 and "non-terminated list" in r.output


def test_verify_verdicts(tmp_path):
    base = "http://example.org/models/fig2"
    trace = tmp_path / "t.tsv"
    trace.write_text(f"# model {base}#wfm\n0\ti/2#it\t{base}#B\tactive\tdone\n"
                     f"1\ti/1#it\t{base}#A\tactive\tdone\n")
    r = invoke("verify", FIG2, trace)
    assert r.exit_code == 1 and "position 0" in r.output
    trace.write_text(f"# model {base}#wfm\n")
    r = invoke("verify", FIG2, trace)
    assert r.exit_code == 1 and "not conformant" in r.output
    trace.write_text("garbage line\n")
    assert invoke("verify", FIG2, trace).exit_code != 0


def test_bench_table():
    r = invoke("bench", "--buildings", "1,2", "--workload", "W1", "--interval", 0, "--sep", ",")
    assert r.exit_code == 0
    lines = r.output.strip().splitlines()
    assert lines[0] == "buildings,W1 [s],W1 requests" and [l.split(",")[0] for l in lines[1:]] == ["1", "2"]
    assert int(lines[2].split(",")[2]) == 2 * int(lines[1].split(",")[2])


def _serve(port, *args):
    return subprocess.Popen([sys.executable, "-m", "wildflow.cli", "serve", "--port", str(port), *args],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)


def test_serve_preload_and_port_clash():
    port = free_port()
    first = _serve(port, "--container", "instances/", "--container", "devices/",
                   f"devices/a={DATA / 'lamp.ttl'}")
    try:
        base = f"http://127.0.0.1:{port}/"
        for _ in range(200):
            try:
                r = httpx.get(base + "instances/")
                break
            except httpx.TransportError:
                time.sleep(0.05)
        assert r.status_code == 200 and "ldp:contains" not in r.text
        assert '"off"' in httpx.get(base + "devices/a").text
        second = _serve(port)
        assert second.wait(timeout=30) == 3
        assert "cannot bind" in second.stderr.read()
    finally:
        first.terminate()
        first.wait(timeout=10)
