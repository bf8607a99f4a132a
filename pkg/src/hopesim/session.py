"""Session orchestration: pausable runs, persistence, replay, event stream.

A session composes the land environment, the institutional network, a chat
backend, the role-iteration protocol, and the analysis assistants.  Each
perspective-taking episode is a fresh seeded run persisted as flat files
(CSV series, JSONL transcript, JSONL gateway log, config copy) so any run
can be diffed and replayed byte-for-byte.
"""
from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from . import assistants, land, protocol
from .decisions import EVEN_SPLIT, PolicyDecision
from .gateway import (
    Gateway,
    ReplayBackend,
    RetryPolicy,
    ScriptBook,
    ScriptedBackend,
    RemoteBackend,
    UsageLedger,
)
from .institutions import (
    AgentMessage,
    InstitutionNetwork,
    OBSERVER,
    RoundError,
    RoundResult,
    RoundSuspension,
    activate_round,
)
from .land import LandParams, LandState, PolicyLevers, ServiceId
from .protocol import (
    BeginSimulation,
    CompleteIntegration,
    CompleteReflection,
    ProtocolEvent,
    ProtocolPhase,
    ProtocolState,
    SimulationEnded,
    UserMessage,
)
from .scenario import Scenario, default_script_book, default_scenario_payload, scenario_from_dict

CSV_COLUMNS = (
    "tick",
    "phase",
    "meat_supply",
    "goal_meat",
    "pa_coverage",
    "goal_pa",
    "share_agri",
    "share_env",
    "surplus_agri",
    "surplus_env",
)


class SessionStatus(str, Enum):
    RUNNING = "running"
    AWAITING_HUMAN = "awaiting_human"
    AWAITING_REFLECTION = "awaiting_reflection"
    COMPLETED = "completed"
    FAILED = "failed"


class SessionStateError(RuntimeError):
    pass


class ReplayError(RuntimeError):
    pass


@dataclass
class SessionConfig:
    scenario_path: str | None = None
    human_role: str | None = None
    phases: int = 5
    lag: int = 15
    seed: int = 0
    backend: str = "stub"  # stub | remote
    script_path: str | None = None
    budget_rate: float = 100.0
    out_dir: str | None = None
    human_timeout: float | None = None  # seconds; None = wait forever

    def validate(self) -> None:
        if self.phases < 1:
            raise ValueError("phases must be >= 1")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")
        if self.backend not in ("stub", "remote"):
            raise ValueError(f"unknown backend kind {self.backend!r}")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "SessionConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in payload.items() if k in known})


@dataclass(frozen=True)
class TickRecord:
    """Full-precision per-tick row; the CSV is its 6-decimal rendering."""

    tick: int
    phase: int
    meat_supply: float
    goal_meat: float
    pa_coverage: float
    goal_pa: float
    share_agri: float
    share_env: float
    surplus_agri: float
    surplus_env: float
    inflow_agri: float
    inflow_env: float
    expenditure_agri: float
    expenditure_env: float

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.tick),
                str(self.phase),
                f"{self.meat_supply:.6f}",
                f"{self.goal_meat:.6f}",
                f"{self.pa_coverage:.6f}",
                f"{self.goal_pa:.6f}",
                f"{self.share_agri:.6f}",
                f"{self.share_env:.6f}",
                f"{self.surplus_agri:.6f}",
                f"{self.surplus_env:.6f}",
            ]
        )


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str  # tick_advanced | message_emitted | decision_applied | status_changed
    payload: dict

    def as_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload}


def _phase_of_tick(tick: int, lag: int, phases: int) -> int:
    """Phase governing a completed tick: phase 0 covers ticks 1..lag, etc."""
    return min((tick - 1) // lag, phases - 1)


def make_backend(config: SessionConfig):
    if config.backend == "stub":
        if config.script_path:
            book = ScriptBook.from_file(config.script_path)
        else:
            book = default_script_book(config.phases)
        return ScriptedBackend(book)
    return RemoteBackend()


class Session:
    """One perspective-shifting session; all mutation happens under one lock."""

    def __init__(
        self,
        config: SessionConfig,
        scenario_payload: dict,
        backend,
        session_id: str | None = None,
        out_root: str | Path | None = None,
    ):
        config.validate()
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config
        self.scenario_payload = scenario_payload
        self.scenario: Scenario = scenario_from_dict(scenario_payload, config.budget_rate)
        self.ledger = UsageLedger()
        self.gateway = Gateway(backend, self.ledger)
        self.protocol = ProtocolState()
        self.status = SessionStatus.AWAITING_REFLECTION
        self.failure_reason: str | None = None

        root = Path(out_root or config.out_dir or "runs")
        self.dir = root / self.id
        self.dir.mkdir(parents=True, exist_ok=True)

        self.episode = 0
        self.episode_role: str | None = None
        self.network: InstitutionNetwork = self.scenario.network
        self.sim: land.LandSimulation | None = None
        self.levers: PolicyLevers = self.scenario.land.initial_levers()
        self.decision: PolicyDecision = EVEN_SPLIT
        self.transcript: list[AgentMessage] = []
        self.records: list[TickRecord] = []
        self.focus: frozenset[str] = frozenset()
        self.vaa_dialogue: list[tuple[str, str]] = []
        self.decision_draft: str = ""

        self.events: list[Event] = []
        self._event_cond = threading.Condition()
        self._lock = threading.RLock()
        self._suspension: RoundSuspension | None = None
        self._persisted_msgs = 0

        # The world exists from creation so snapshots and digests work pre-run.
        self._init_world()

    # --- plumbing -------------------------------------------------------------

    @property
    def episode_dir(self) -> Path:
        return self.dir / f"episode-{self.episode}"

    @property
    def csv_path(self) -> Path:
        return self.episode_dir / "series.csv"

    @property
    def transcript_path(self) -> Path:
        return self.episode_dir / "transcript.jsonl"

    @property
    def gateway_log_path(self) -> Path:
        return self.episode_dir / "gateway.jsonl"

    def _init_world(self) -> None:
        setup = self.scenario.land
        self.sim = land.LandSimulation(
            land.make_world(
                setup.width, setup.height, self.config.seed, setup.params, setup.prices,
                setup.initial_levers(),
            ),
            land.initial_accounts(setup.params.budget_rate),
            setup.params,
            setup.prices,
        )
        self.levers = setup.initial_levers()
        self.decision = EVEN_SPLIT

    def _emit(self, kind: str, payload: dict) -> None:
        with self._event_cond:
            self.events.append(Event(seq=len(self.events) + 1, kind=kind, payload=payload))
            self._event_cond.notify_all()

    def _set_status(self, status: SessionStatus, emit: bool = True, reason: str | None = None) -> None:
        self.status = status
        self.failure_reason = reason
        if emit:
            payload = {"status": status.value}
            if reason:
                payload["reason"] = reason
            self._emit("status_changed", payload)

    def _append_csv(self, record: TickRecord) -> None:
        with open(self.csv_path, "a", encoding="utf-8", newline="") as fh:
            fh.write(record.csv_row() + "\n")

    def _append_transcript(self, message: AgentMessage) -> None:
        with open(self.transcript_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(message.as_dict()) + "\n")

    # --- protocol -------------------------------------------------------------

    def handle_protocol_event(self, event: ProtocolEvent) -> SessionStatus:
        """Advance the protocol; a begin event starts a fresh seeded episode."""
        with self._lock:
            self.protocol = protocol.advance(self.protocol, event)
            if isinstance(event, BeginSimulation):
                self._start_episode(event.role)
            elif self.protocol.phase in protocol.COMPANION_PHASES:
                self._set_status(SessionStatus.AWAITING_REFLECTION, emit=False)
            elif self.protocol.phase == ProtocolPhase.COMPLETION:
                self._set_status(SessionStatus.COMPLETED, emit=False)
            return self.status

    def _start_episode(self, role: str) -> None:
        self.episode += 1
        self.episode_role = role
        human = None if role in (OBSERVER, "", None) else role
        self.network = self.scenario.network.with_human_role(human)
        self.network.validate()
        self._init_world()
        self.transcript = []
        self.records = []
        self._suspension = None
        self._persisted_msgs = 0
        self.vaa_dialogue = []
        self.decision_draft = ""
        self.focus = frozenset()

        self.episode_dir.mkdir(parents=True, exist_ok=True)
        with open(self.csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
        self.transcript_path.write_text("", encoding="utf-8")
        self.gateway_log_path.write_text("", encoding="utf-8")
        self.gateway.attach_log_file(self.gateway_log_path)
        with open(self.episode_dir / "config.json", "w", encoding="utf-8") as fh:
            json.dump(
                {"config": self.config.as_dict(), "episode": self.episode, "role": role},
                fh,
                indent=2,
            )
        with open(self.episode_dir / "scenario.json", "w", encoding="utf-8") as fh:
            json.dump(self.scenario_payload, fh, indent=2)
        self._set_status(SessionStatus.RUNNING, emit=False)

    # --- the run loop -----------------------------------------------------------

    def run_until_pause(self) -> SessionStatus:
        """Advance ticks, firing an activation round at each phase boundary,
        until the run suspends on the human's turn, fails, or completes."""
        with self._lock:
            if self.status != SessionStatus.RUNNING:
                raise SessionStateError(f"cannot run while {self.status.value}")
            if self.protocol.phase != ProtocolPhase.PERSPECTIVE_TAKING:
                raise SessionStateError("begin a perspective-taking episode first")
            return self._run_loop()

    def _run_loop(self) -> SessionStatus:
        assert self.sim is not None
        total = self.config.phases * self.config.lag
        while True:
            if self.sim.state.tick >= total:
                self._set_status(SessionStatus.COMPLETED)
                return self.status
            report = self.sim.step(self.levers)
            state = self.sim.state
            agri, env = self.sim.accounts
            record = TickRecord(
                tick=state.tick,
                phase=_phase_of_tick(state.tick, self.config.lag, self.config.phases),
                meat_supply=state.supply[ServiceId.MEAT],
                goal_meat=self.levers.goal_meat,
                pa_coverage=state.pa_coverage,
                goal_pa=self.levers.goal_pa,
                share_agri=agri.share,
                share_env=env.share,
                surplus_agri=agri.surplus,
                surplus_env=env.surplus,
                inflow_agri=report.inflow[land.AGRICULTURAL],
                inflow_env=report.inflow[land.ENVIRONMENTAL],
                expenditure_agri=report.expenditure[land.AGRICULTURAL],
                expenditure_env=report.expenditure[land.ENVIRONMENTAL],
            )
            self.records.append(record)
            self._append_csv(record)
            self._emit("tick_advanced", {"tick": state.tick, "phase": record.phase})

            tick = state.tick
            if tick % self.config.lag == 0:
                boundary_phase = tick // self.config.lag
                if 1 <= boundary_phase <= self.config.phases - 1:
                    outcome = self._activation_round(boundary_phase, tick)
                    if outcome is not None:
                        return outcome

    def _activation_round(
        self,
        phase: int,
        tick: int,
        human_input: str | None = None,
        resume: RoundSuspension | None = None,
    ) -> SessionStatus | None:
        """Run (or resume) the round at a phase boundary.  Returns a status when
        the run must stop here (suspension or failure), else None."""
        try:
            result = activate_round(
                self.network,
                self.gateway,
                phase=phase,
                tick=tick,
                env_digest=self._env_digest(),
                transcript=self.transcript,
                previous_decision=self.decision,
                human_input=human_input,
                resume=resume,
            )
        except RoundError as exc:
            self._persist_round_messages(exc.partial)
            self._set_status(SessionStatus.FAILED, reason=str(exc.cause))
            return self.status
        if isinstance(result, RoundSuspension):
            self._persist_round_messages(result.messages)
            self._suspension = result
            self._set_status(SessionStatus.AWAITING_HUMAN)
            return self.status
        self._persist_round_messages(list(result.messages))
        self._suspension = None
        self._persisted_msgs = 0
        self._apply_decision(phase, result)
        return None

    def _persist_round_messages(self, messages: list[AgentMessage]) -> None:
        for message in messages[self._persisted_msgs:]:
            self.transcript.append(message)
            self._append_transcript(message)
            self._emit("message_emitted", message.as_dict())
        self._persisted_msgs = len(messages)

    def _apply_decision(self, phase: int, result: RoundResult) -> None:
        decision = result.decision
        self.decision = decision
        assert self.sim is not None
        self.sim.accounts = land.reallocate(
            self.sim.accounts,
            decision.share_agri,
            decision.share_env,
            self.scenario.land.params.budget_rate,
        )
        self.levers = PolicyLevers(
            subsidy=self.levers.subsidy,
            goal_meat=self.levers.goal_meat * (1.0 + decision.adj_meat),
            goal_pa=min(1.0, max(0.0, self.levers.goal_pa * (1.0 + decision.adj_pa))),
        )
        self._emit(
            "decision_applied",
            {"phase": phase, "decision": decision.as_dict(), "carried_over": result.carried_over},
        )

    def submit_human_decision(self, text: str, allow_empty: bool = False) -> SessionStatus:
        """Inject the human's text verbatim at the suspended slot and resume.

        ``allow_empty`` is the timeout-expiry path: the slot is filled with an
        empty statement so the round can proceed.
        """
        with self._lock:
            if self.status != SessionStatus.AWAITING_HUMAN or self._suspension is None:
                raise SessionStateError("no suspended round awaiting input")
            if not text.strip() and not allow_empty:
                raise ValueError("submission must be non-empty")
            suspension = self._suspension
            self._set_status(SessionStatus.RUNNING)
            outcome = self._activation_round(
                suspension.phase, suspension.tick, human_input=text, resume=suspension
            )
            if outcome is not None:
                return outcome
            return self._run_loop()

    # --- read models ------------------------------------------------------------

    def _env_digest(self) -> str:
        total = self.config.phases * self.config.lag
        if not self.records:
            return "no ticks completed yet"
        r = self.records[-1]
        meat_tail = ", ".join(f"{x.meat_supply:.6f}" for x in self.records[-5:])
        return "\n".join(
            [
                f"tick {r.tick} of {total} (phase {r.phase})",
                f"meat_supply={r.meat_supply:.6f} goal_meat={r.goal_meat:.6f} "
                f"gap={r.goal_meat - r.meat_supply:.6f}",
                f"pa_coverage={r.pa_coverage:.6f} goal_pa={r.goal_pa:.6f} "
                f"gap={r.goal_pa - r.pa_coverage:.6f}",
                f"share_agri={r.share_agri:.6f} share_env={r.share_env:.6f}",
                f"surplus_agri={r.surplus_agri:.6f} surplus_env={r.surplus_env:.6f}",
                f"recent meat_supply: {meat_tail}",
            ]
        )

    def _visible_to_human(self, agent_id: str) -> bool:
        human = self.network.schedule.human_role
        if human is None:
            return True  # the observer sees everything
        if agent_id == human:
            return True
        return agent_id in self.network.graph.sources_for(human)

    def snapshot(self) -> dict:
        """Immutable read model for the UI and API."""
        with self._lock:
            assert self.sim is not None
            tick = self.sim.state.tick
            groups = []
            for agent_id in self.network.schedule.order:
                profile = self.network.profile(agent_id)
                groups.append(
                    {
                        "agent": agent_id,
                        "role_name": profile.role_name,
                        "visible_to_human": self._visible_to_human(agent_id),
                        "messages": [
                            m.as_dict() for m in self.transcript if m.agent == agent_id
                        ],
                    }
                )
            state = self.sim.state
            grid = {
                "width": state.width,
                "height": state.height,
                "cells": [
                    {"aft": c.aft, "protected": c.protected, "capitals": list(c.capitals)}
                    for c in state.cells
                ],
            }
            return {
                "id": self.id,
                "episode": self.episode,
                "episode_role": self.episode_role,
                "aft_names": {a.id: a.name for a in self.scenario.land.params.afts},
                "grid": grid,
                "tick": tick,
                "phase": min(tick // self.config.lag, self.config.phases - 1),
                "total_ticks": self.config.phases * self.config.lag,
                "status": self.status.value,
                "failure_reason": self.failure_reason,
                "awaiting": self._suspension.awaiting if self._suspension else None,
                "protocol": {
                    "phase": self.protocol.phase.value,
                    "current_role": self.protocol.current_role,
                    "roles_played": list(self.protocol.roles_played),
                    "pending_role": self.protocol.pending_role,
                },
                "decision": self.decision.as_dict(),
                "decision_draft": self.decision_draft,
                "messages": groups,
                "focus": sorted(self.focus),
                "columns": [c for c in CSV_COLUMNS if c != "tick"],
                "series_tail": [
                    {c: getattr(r, c) for c in CSV_COLUMNS} for r in self.records[-10:]
                ],
                "usage": self.ledger.snapshot(),
                "human_role": self.network.schedule.human_role,
                "config": {
                    "phases": self.config.phases,
                    "lag": self.config.lag,
                    "seed": self.config.seed,
                    "backend": self.config.backend,
                },
            }

    def events_since(self, cursor: int = 0) -> list[Event]:
        with self._event_cond:
            return [e for e in self.events if e.seq > cursor]

    def is_terminal(self) -> bool:
        return self.status in (SessionStatus.COMPLETED, SessionStatus.FAILED)

    def iter_events(self, cursor: int = 0, poll: float = 0.05, timeout: float | None = None) -> Iterator[Event]:
        """Backlog first, then live events until the session is terminal."""
        deadline = time.monotonic() + timeout if timeout is not None else None
        while True:
            batch = self.events_since(cursor)
            for event in batch:
                cursor = event.seq
                yield event
            if self.is_terminal() and not self.events_since(cursor):
                return
            if deadline is not None and time.monotonic() > deadline:
                return
            with self._event_cond:
                self._event_cond.wait(poll)

    # --- assistants ---------------------------------------------------------------

    def catalog(self) -> assistants.DataCatalog:
        return assistants.DataCatalog.from_csv(self.csv_path)

    def set_focus(self, columns: list[str]) -> str:
        """Update the focused columns; returns the automatic analysis text."""
        with self._lock:
            catalog = self.catalog()
            focus = assistants.FocusSet(frozenset(columns))
            focus.validate(catalog)
            self.focus = focus.columns
            phase = min(self.sim.state.tick // self.config.lag, self.config.phases - 1)
            return assistants.saa_on_focus_change(focus, catalog, self.gateway, phase_key=phase)

    def assistant_message(self, text: str) -> tuple[str, list[assistants.ToolCall]]:
        with self._lock:
            if not text.strip():
                raise ValueError("message must be non-empty")
            self.vaa_dialogue.append(("user", text))
            phase = min(self.sim.state.tick // self.config.lag, self.config.phases - 1)
            reply, calls = assistants.vaa_turn(
                self.vaa_dialogue, self.catalog(), self.gateway, phase_key=phase
            )
            self.vaa_dialogue.append(("assistant", reply))
            return reply, calls

    def generate_report(self) -> str:
        """Draft a report from the assistant dialogue into the decision draft.
        Regeneration replaces the draft; nothing is ever auto-submitted."""
        with self._lock:
            dialogue = self.vaa_dialogue or [("user", "Please draft the technical report.")]
            report = assistants.generate_report(dialogue, self.gateway)
            self.decision_draft = report
            return report

    # --- reflection -----------------------------------------------------------------

    def reflect(self, text: str) -> str:
        with self._lock:
            reply, self.protocol = protocol.reflect_turn(self.protocol, text, self.gateway)
            with open(self.dir / "reflection.jsonl", "a", encoding="utf-8") as fh:
                for entry in self.protocol.responses[-2:]:
                    fh.write(
                        json.dumps(
                            {"phase": entry.phase, "speaker": entry.speaker, "text": entry.text}
                        )
                        + "\n"
                    )
            return reply

    def export_reflections(self) -> str:
        with self._lock:
            export = protocol.export_markdown(self.protocol, self.gateway)
            (self.dir / "export.md").write_text(export.markdown, encoding="utf-8")
            return export.markdown


def create_session(
    config: SessionConfig,
    session_id: str | None = None,
    backend=None,
    out_root: str | Path | None = None,
) -> Session:
    """Build a session from config: scenario, backend, fresh seeded world."""
    config.validate()
    if config.scenario_path:
        with open(config.scenario_path, encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = default_scenario_payload()
    if backend is None:
        backend = make_backend(config)
    return Session(config, payload, backend, session_id=session_id, out_root=out_root)


def begin_default_role(session: Session) -> str:
    return session.config.human_role or session.scenario.human_role or OBSERVER


def run_headless(session: Session, role: str | None = None) -> SessionStatus:
    """Begin an episode and run it; suspensions are returned, not resolved."""
    session.handle_protocol_event(BeginSimulation(role or begin_default_role(session)))
    return session.run_until_pause()


@dataclass(frozen=True)
class ReplayOutcome:
    session: Session
    identical: bool
    original_csv: str
    replayed_csv: str


def replay_run(run_dir: str | Path, out_root: str | Path | None = None) -> ReplayOutcome:
    """Re-execute a persisted run with the gateway substituted by its log.

    Human submissions are re-injected verbatim from the recorded transcript.
    The replayed CSV must be byte-identical to the original.
    """
    run_dir = Path(run_dir)
    config_path = run_dir / "config.json"
    scenario_path = run_dir / "scenario.json"
    log_path = run_dir / "gateway.jsonl"
    csv_path = run_dir / "series.csv"
    for p in (config_path, scenario_path, log_path, csv_path):
        if not p.exists():
            raise ReplayError(f"run log incomplete: missing {p.name}")
    meta = json.loads(config_path.read_text(encoding="utf-8"))
    config = SessionConfig.from_dict(meta["config"])
    role = meta.get("role") or OBSERVER
    payload = json.loads(scenario_path.read_text(encoding="utf-8"))

    human_texts: dict[tuple[int, str], str] = {}
    transcript_path = run_dir / "transcript.jsonl"
    if transcript_path.exists():
        with open(transcript_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                msg = json.loads(line)
                if msg.get("authored_by_human"):
                    human_texts[(msg["phase"], msg["agent"])] = msg["text"]

    backend = ReplayBackend.from_log(log_path)
    session = Session(
        config,
        payload,
        backend,
        session_id=f"replay-{uuid.uuid4().hex[:8]}",
        out_root=out_root or (run_dir.parent.parent / "replays"),
    )
    session.handle_protocol_event(BeginSimulation(role))
    status = session.run_until_pause()
    while status == SessionStatus.AWAITING_HUMAN:
        assert session._suspension is not None
        key = (session._suspension.phase, session._suspension.awaiting)
        if key not in human_texts:
            raise ReplayError(f"transcript has no human submission for {key}")
        status = session.submit_human_decision(human_texts[key])
    if status == SessionStatus.FAILED:
        raise ReplayError(f"replay failed: {session.failure_reason}")
    original = csv_path.read_text(encoding="utf-8")
    replayed = session.csv_path.read_text(encoding="utf-8")
    return ReplayOutcome(
        session=session,
        identical=original == replayed,
        original_csv=original,
        replayed_csv=replayed,
    )
