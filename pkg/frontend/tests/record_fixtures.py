"""Record API fixtures for the frontend contract tests.

Runs the session service in-process with the deterministic stub backend and
captures the exact HTTP payloads the client consumes.  Regenerate with:

    python3 frontend/tests/record_fixtures.py
"""
from __future__ import annotations

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from hopesim.api import SessionStore, create_app
from hopesim.scenario import default_script_book

FIXTURES = Path(__file__).parent / "fixtures"
H = {"Content-Type": "application/json"}


def dump(name: str, payload) -> None:
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print("wrote", name)


def main() -> None:
    store = SessionStore(out_root=tempfile.mkdtemp())
    client = TestClient(create_app(store))

    # observer session through the full protocol walk
    sid = client.post("/sessions", json={"seed": 1}).json()["id"]
    book = store.get(sid).gateway.backend.book
    book.add("companion", 1, 1, "How did you approach your role as an observer?")
    book.add("companion", "summary", 1, "- observed the budget tension between institutions")
    book.add("saa", 4, 1, "Focused series summarised.")
    dump("snapshot_created.json", client.get(f"/sessions/{sid}").json())

    client.post(f"/sessions/{sid}/events/begin", json={})
    client.post(f"/sessions/{sid}/run")
    dump("snapshot_completed.json", client.get(f"/sessions/{sid}").json())
    (FIXTURES / "series_completed.csv").write_text(
        client.get(f"/sessions/{sid}/series.csv").text, encoding="utf-8"
    )
    print("wrote series_completed.csv")

    events = []
    with client.stream("GET", f"/sessions/{sid}/stream") as resp:
        current: dict = {}
        for line in resp.iter_lines():
            if line.startswith("id: "):
                current["seq"] = int(line[4:])
            elif line.startswith("event: "):
                current["kind"] = line[7:]
            elif line.startswith("data: "):
                current["payload"] = json.loads(line[6:])
            elif line == "" and current:
                events.append(current)
                current = {}
    dump("events_completed.json", events)

    client.post(f"/sessions/{sid}/events/simulation-ended")
    client.post(f"/sessions/{sid}/reflection/message", json={"text": "I watched quietly."})
    dump("snapshot_reflection.json", client.get(f"/sessions/{sid}").json())
    client.post(
        f"/sessions/{sid}/events/complete-reflection",
        json={"choice": "integrate"},
    )
    dump("snapshot_integration.json", client.get(f"/sessions/{sid}").json())
    client.post(f"/sessions/{sid}/events/complete-integration")
    dump("snapshot_completion.json", client.get(f"/sessions/{sid}").json())

    # human-takeover session paused at the supplier slot
    sid2 = client.post(
        "/sessions", json={"seed": 1, "human_role": "research_supplier"}
    ).json()["id"]
    client.post(f"/sessions/{sid2}/events/begin", json={"role": "research_supplier"})
    client.post(f"/sessions/{sid2}/run")
    dump("snapshot_awaiting_human.json", client.get(f"/sessions/{sid2}").json())


if __name__ == "__main__":
    main()
