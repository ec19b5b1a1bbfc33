#!/usr/bin/env python3
"""Smoke test for the Python bindings and the HTTP session service.

Usage:
    cargo build -p tripgym-cli
    pip install --no-build-isolation -e crates/python
    python3 python/smoke_test.py

Set TRIPGYM_BIN to use a different `tripgym` binary.
"""

import json
import os
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request
from pathlib import Path

import tripgym

ROOT = Path(__file__).resolve().parent.parent
BIN = os.environ.get("TRIPGYM_BIN", str(ROOT / "target" / "debug" / "tripgym"))
TOKEN = "smoke-token"

failures = []


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {name}{': ' + detail if detail else ''}")
    if not ok:
        failures.append(name)


def play_in_process(scenario):
    env = tripgym.Environment(scenario)
    agent = tripgym.ScriptedAgent("oracle", scenario)
    transcript = [{"role": "user", "content": env.reset()}]
    while not env.done:
        call = agent.act(transcript)
        obs, reward, done, info = env.step(call["choice"], call["content"], call.get("thought", ""))
        assert info["reward"] == reward
        transcript += [{"role": "agent", "content": call}, {"role": "user", "content": obs}]
    return env.log_jsonl()


class Client:
    def __init__(self, base, token=None):
        self.base = base
        self.token = token

    def call(self, method, path, body=None):
        data = None if body is None else json.dumps(body).encode()
        req = urllib.request.Request(self.base + path, data=data, method=method)
        req.add_header("Content-Type", "application/json")
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as e:
            return e.code, json.loads(e.read() or b"null")


def bindings():
    schema = tripgym.tool_schema()
    check("tool schema", schema["function"]["name"] == "interact_with_env")
    check("system prompt", tripgym.system_prompt("multi") != tripgym.system_prompt("single"))

    dataset = tripgym.generate_dataset("22:3,33:2", seed=5)
    scenarios = dataset["scenarios"]
    check("generate", len(scenarios) == 5, f"{len(scenarios)} scenarios")

    logs = [play_in_process(s) for s in scenarios]
    scores = [tripgym.score_log(log) for log in logs]
    check("oracle in process", all(s == 1.0 for s in scores), f"scores {scores}")
    report = tripgym.report(logs, group_by="composition")
    groups = [g["group"] for g in report["groups"]]
    check("report from logs", report["overall"]["score"] == 1.0 and groups == ["Travel-22", "Travel-33"], str(groups))

    env = tripgym.Environment(scenarios[0], {"max_steps": 1})
    env.step("action", "Hello!")
    try:
        env.step("action", "Still there?")
        check("step after done", False, "no error raised")
    except tripgym.TripgymError as e:
        check("step after done", str(e).startswith("EPISODE_DONE"), str(e))
    try:
        tripgym.Environment(scenarios[0], {"max_steps": 0})
        check("invalid config", False, "no error raised")
    except tripgym.TripgymError as e:
        check("invalid config", str(e).startswith("INVALID_CONFIG"), str(e))


def round_trip(tmp):
    subprocess.run([BIN, "generate", "--plan", "22:2", "--seed", "9", "--out", str(tmp / "ds")], check=True, stdout=subprocess.DEVNULL)
    scenarios = tripgym.load_dataset(tmp / "ds")["scenarios"]
    env = dict(os.environ, TRIPGYM_TOKEN=TOKEN)
    server = subprocess.Popen(
        [BIN, "serve", "--bind", "127.0.0.1:0", "--data-dir", str(tmp / "store"), "--dataset", str(tmp / "ds")],
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        env=env,
        text=True,
    )
    try:
        line = server.stdout.readline().strip()
        base = line.removeprefix("listening on ") + "/v1"
        client = Client(base, TOKEN)

        status, _ = Client(base, "wrong").call("GET", "/healthz")
        check("bad credential", status == 401)
        status, health = client.call("GET", "/healthz")
        check("healthz", status == 200 and health["scenarios"] == 2, json.dumps(health))

        started = time.monotonic()
        scenario = scenarios[0]
        status, created = client.call("POST", "/sessions", {"scenario_id": scenario["scenario_id"]})
        check("create", status == 201 and "budget is limited" in created["observation"])
        sid = created["session_id"]
        agent = tripgym.ScriptedAgent("oracle", scenario)
        transcript = [{"role": "user", "content": created["observation"]}]
        seen = []
        done = False
        while not done:
            call = agent.act(transcript)
            status, out = client.call("POST", f"/sessions/{sid}/step", call)
            assert status == 200, out
            seen.append((out["observation"], out["reward"], out["done"]))
            done = out["done"]
            transcript += [{"role": "agent", "content": call}, {"role": "user", "content": out["observation"]}]
        elapsed = time.monotonic() - started

        persisted = (tmp / "store" / "sessions" / f"{sid}.jsonl").read_text()
        turns = [r for r in map(json.loads, persisted.splitlines()) if r["record"] == "turn"]
        expected = [(t["observation"], t["reward"], i == len(turns) - 1) for i, t in enumerate(turns)]
        check("wire fidelity", seen == expected, f"{len(seen)} turns match the persisted records")
        check("client round trip", tripgym.score_log(persisted) == 1.0 and elapsed < 5.0, f"score 1.0 in {elapsed:.2f}s")

        status, view = client.call("GET", f"/sessions/{sid}")
        check("transcript length", status == 200 and view["turns"] == len(seen))
        status, err = client.call("POST", f"/sessions/{sid}/step", {"choice": "action", "content": "Hi"})
        check("EPISODE_DONE surfaced", status == 409 and err["error"]["code"] == "EPISODE_DONE")
        status, err = client.call("POST", "/sessions", {"scenario_id": "nope"})
        check("unknown scenario", status == 404 and err["error"]["code"] == "NOT_FOUND")
    finally:
        server.terminate()
        server.wait(timeout=10)


def main():
    bindings()
    if Path(BIN).is_file():
        with tempfile.TemporaryDirectory() as tmp:
            round_trip(Path(tmp))
    else:
        print(f"SKIP  http round trip: no binary at {BIN}")
    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
