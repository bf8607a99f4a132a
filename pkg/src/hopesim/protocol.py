"""Role-iteration protocol and the reflective companion.

A six-phase state machine guides the user through contextualization,
perspective-taking runs, reflection, transition between roles, and a final
integration step.  In the companion phases an AI facilitator holds a
reflection dialogue; the full log can be exported as a Markdown document
with a generated key-insights summary.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

from .gateway import ChatMessage, ChatRequest, Gateway, RetryPolicy


class ProtocolPhase(str, Enum):
    CONTEXTUALIZATION = "contextualization"
    PERSPECTIVE_TAKING = "perspective_taking"
    REFLECTION = "reflection"
    TRANSITION = "transition"
    INTEGRATION = "integration"
    COMPLETION = "completion"


COMPANION_PHASES = (
    ProtocolPhase.REFLECTION,
    ProtocolPhase.TRANSITION,
    ProtocolPhase.INTEGRATION,
)


@dataclass(frozen=True)
class BeginSimulation:
    role: str


@dataclass(frozen=True)
class SimulationEnded:
    pass


@dataclass(frozen=True)
class CompleteReflection:
    """The user's choice at the end of a reflection: replay the same role,
    transition to a named new role, or move to integration."""

    choice: str  # replay | new_role | integrate
    new_role: str | None = None

    def __post_init__(self) -> None:
        if self.choice not in ("replay", "new_role", "integrate"):
            raise ValueError(f"unknown reflection choice {self.choice!r}")
        if self.choice == "new_role" and not self.new_role:
            raise ValueError("new_role choice requires a role name")


@dataclass(frozen=True)
class UserMessage:
    text: str


@dataclass(frozen=True)
class CompleteIntegration:
    pass


ProtocolEvent = Union[
    BeginSimulation, SimulationEnded, CompleteReflection, UserMessage, CompleteIntegration
]

EVENT_KINDS = (BeginSimulation, SimulationEnded, CompleteReflection, UserMessage, CompleteIntegration)


@dataclass(frozen=True)
class ReflectionEntry:
    phase: str
    speaker: str  # user | companion
    text: str


@dataclass(frozen=True)
class ProtocolState:
    phase: ProtocolPhase = ProtocolPhase.CONTEXTUALIZATION
    current_role: str = ""
    roles_played: tuple[str, ...] = ()
    responses: tuple[ReflectionEntry, ...] = ()
    planned_roles: int | None = None
    pending_role: str | None = None


class IllegalTransition(ValueError):
    def __init__(self, phase: ProtocolPhase, event: ProtocolEvent):
        self.phase = phase
        self.event_kind = type(event).__name__
        super().__init__(f"event {self.event_kind} is not legal in phase {phase.value}")


class CompanionUnavailable(ValueError):
    """The companion only speaks in reflection, transition, and integration."""


class ExportBeforeCompletion(ValueError):
    pass


def advance(state: ProtocolState, event: ProtocolEvent) -> ProtocolState:
    """Apply one protocol event; anything off the transition table raises."""
    phase = state.phase
    if phase == ProtocolPhase.CONTEXTUALIZATION and isinstance(event, BeginSimulation):
        return replace(
            state,
            phase=ProtocolPhase.PERSPECTIVE_TAKING,
            current_role=event.role,
            roles_played=state.roles_played + (event.role,),
        )
    if phase == ProtocolPhase.PERSPECTIVE_TAKING and isinstance(event, SimulationEnded):
        return replace(state, phase=ProtocolPhase.REFLECTION)
    if phase == ProtocolPhase.REFLECTION and isinstance(event, CompleteReflection):
        if event.choice == "replay":
            return replace(
                state,
                phase=ProtocolPhase.PERSPECTIVE_TAKING,
                roles_played=state.roles_played + (state.current_role,),
            )
        if event.choice == "new_role":
            return replace(state, phase=ProtocolPhase.TRANSITION, pending_role=event.new_role)
        return replace(state, phase=ProtocolPhase.INTEGRATION)
    if phase == ProtocolPhase.TRANSITION and isinstance(event, BeginSimulation):
        return replace(
            state,
            phase=ProtocolPhase.PERSPECTIVE_TAKING,
            current_role=event.role,
            roles_played=state.roles_played + (event.role,),
            pending_role=None,
        )
    if phase == ProtocolPhase.INTEGRATION and isinstance(event, CompleteIntegration):
        return replace(state, phase=ProtocolPhase.COMPLETION)
    raise IllegalTransition(phase, event)


COMPANION_TEMPLATE = """You are a reflective dialogue companion inside a perspective-shifting \
simulation of land-use policymaking. Users step into stakeholder roles in \
simulations shaped by competing goals, trade-offs, and institutional dynamics. \
Your job is to help them examine their decisions, compare perspectives, and \
carry insights from one role to the next.

Follow the approach for the current phase:

1. PERSPECTIVE REFLECTION PHASE: Help the user look closely at the role just \
played, the decisions made, the difficulties met, and what was learned.
- Ask about their decision process and the strategies they relied on
- Explore how they handled trade-offs and competing priorities
- Invite them to consider what they would do differently on a replay

2. PERSPECTIVE TRANSITION PHASE: Help the user carry knowledge from the roles \
already played into the role they are about to take.
- Ask which role comes next and what they expect of it
- Connect lessons from earlier roles to the new context
- Encourage them to anticipate the new role's difficulties
- Support concrete strategies for the new role grounded in past perspectives

3. PERSPECTIVE INTEGRATION PHASE: Help the user pull the perspectives together.
- Surface patterns, tensions, and interdependencies across the system
- Support a whole-system view that includes the user's own position in it
- Draw out transferable principles for real-world decision contexts

Stay conversational and proceed step by step. Encourage experiential learning, \
perspective-taking, and systems thinking. Let users reach their own insights: \
you are a facilitator, not a teacher.

Current phase: {phase}

Current role: {current_role}

Previous roles played: {roles_played}

Previous responses: {responses}"""

_PHASE_LABELS = {
    ProtocolPhase.REFLECTION: "Perspective Reflection",
    ProtocolPhase.TRANSITION: "Perspective Transition",
    ProtocolPhase.INTEGRATION: "Perspective Integration",
}


def _render_roles(roles: tuple[str, ...]) -> str:
    return ", ".join(roles) if roles else "none"


def _render_responses(responses: tuple[ReflectionEntry, ...]) -> str:
    if not responses:
        return "none"
    return "\n" + "\n".join(f"{e.speaker}: {e.text}" for e in responses)


def companion_prompt(state: ProtocolState) -> str:
    """The companion system prompt for the current phase, fully substituted."""
    if state.phase not in COMPANION_PHASES:
        raise CompanionUnavailable(f"no companion behaviour in phase {state.phase.value}")
    return COMPANION_TEMPLATE.format(
        phase=_PHASE_LABELS[state.phase],
        current_role=state.current_role or "none",
        roles_played=_render_roles(state.roles_played),
        responses=_render_responses(state.responses),
    )


def _companion_turn_key(state: ProtocolState) -> int:
    """Scripted-run key: 1-based ordinal of the next companion reply."""
    return sum(1 for e in state.responses if e.speaker == "companion") + 1


def reflect_turn(
    state: ProtocolState,
    user_text: str,
    gateway: Gateway,
    retry_policy: RetryPolicy | None = None,
) -> tuple[str, ProtocolState]:
    """One reflection exchange: the prompt is rebuilt each turn so the whole
    dialogue so far is in context.  Backend failures leave the state unchanged."""
    prompt = companion_prompt(state)
    request = ChatRequest(
        system=prompt,
        messages=(ChatMessage("user", user_text),),
        tag="companion",
        phase=_companion_turn_key(state),
    )
    reply, _usage, _used = gateway.complete_with_retry(request, retry_policy or RetryPolicy())
    new_state = replace(
        state,
        responses=state.responses
        + (
            ReflectionEntry(state.phase.value, "user", user_text),
            ReflectionEntry(state.phase.value, "companion", reply),
        ),
    )
    return reply, new_state


@dataclass(frozen=True)
class ReflectionExport:
    markdown: str
    summary: str


SUMMARY_INSTRUCTION = (
    "Summarise the key insights from the reflection dialogue below as a short "
    "bullet list. Focus on what the user learned about the system and about "
    "the perspectives they took."
)


def export_markdown(state: ProtocolState, gateway: Gateway) -> ReflectionExport:
    """Markdown export of the whole reflection log plus a generated summary.

    Only available once the protocol has reached completion.  Every logged
    line appears verbatim; the summary section comes last.
    """
    if state.phase != ProtocolPhase.COMPLETION:
        raise ExportBeforeCompletion(f"cannot export in phase {state.phase.value}")
    lines = ["# Perspective-shifting session reflections", ""]
    lines.append(f"Roles played: {_render_roles(state.roles_played)}")
    lines.append("")
    if not state.responses:
        lines += ["No reflections recorded.", ""]
        dialogue_text = "(no reflections recorded)"
    else:
        current_section: str | None = None
        for entry in state.responses:
            if entry.phase != current_section:
                current_section = entry.phase
                lines += [f"## {entry.phase.replace('_', ' ').title()}", ""]
            lines.append(f"- **{entry.speaker}:** {entry.text}")
        lines.append("")
        dialogue_text = "\n".join(f"{e.speaker}: {e.text}" for e in state.responses)
    request = ChatRequest(
        system=SUMMARY_INSTRUCTION,
        messages=(ChatMessage("user", dialogue_text),),
        tag="companion",
        phase="summary",
    )
    summary, _usage, _used = gateway.complete_with_retry(request)
    lines += ["## Key insights", "", summary, ""]
    return ReflectionExport(markdown="\n".join(lines), summary=summary)
