"""The institutional agent network.

Seven role profiles connected by a directed visibility graph, activated in a
fixed schedule once per policy phase.  Any agent can be taken over by the
human user, in which case the round suspends at that agent's slot and resumes
with the submitted text injected verbatim.  The round ends with the high-level
institution's structured decision.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .decisions import (
    InvariantViolation,
    ParseFailure,
    PolicyDecision,
    parse_decision,
)
from .gateway import ChatMessage, ChatRequest, Gateway, GatewayError, RetryPolicy

RESEARCH_SUPPLIER = "research_supplier"
ENV_NGO = "env_ngo"
LAND_USER_ASSOC = "land_user_assoc"
AGRI_INSTITUTION = "agri_institution"
ENV_INSTITUTION = "env_institution"
LAW_CONSULTANT = "law_consultant"
HIGH_LEVEL = "high_level"

ROLE_NAMES = (
    RESEARCH_SUPPLIER,
    ENV_NGO,
    LAND_USER_ASSOC,
    AGRI_INSTITUTION,
    ENV_INSTITUTION,
    LAW_CONSULTANT,
    HIGH_LEVEL,
)

OBSERVER = "observer"  # not an agent: the non-intervening user role

DECISION_RETRIES = 3  # logical parse attempts before carrying the old decision over


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class AgentProfile:
    id: str
    role_name: str
    persona_prompt: str
    produces_decision: bool = False


@dataclass(frozen=True)
class VisibilityGraph:
    """Directed edges (src, dst): src's outputs are visible in dst's prompt."""

    edges: frozenset[tuple[str, str]]

    def sources_for(self, agent_id: str) -> frozenset[str]:
        return frozenset(src for src, dst in self.edges if dst == agent_id)

    def targets_of(self, agent_id: str) -> frozenset[str]:
        return frozenset(dst for src, dst in self.edges if src == agent_id)


@dataclass(frozen=True)
class ActivationSchedule:
    order: tuple[str, ...]
    human_role: str | None = None


@dataclass(frozen=True)
class AgentMessage:
    agent: str
    phase: int
    tick: int
    text: str
    decision: PolicyDecision | None = None
    authored_by_human: bool = False
    carried_over: bool = False

    def as_dict(self) -> dict:
        return {
            "agent": self.agent,
            "phase": self.phase,
            "tick": self.tick,
            "text": self.text,
            "decision": self.decision.as_dict() if self.decision else None,
            "authored_by_human": self.authored_by_human,
            "carried_over": self.carried_over,
        }


@dataclass(frozen=True)
class InstitutionNetwork:
    profiles: tuple[AgentProfile, ...]
    graph: VisibilityGraph
    schedule: ActivationSchedule

    def validate(self) -> None:
        ids = [p.id for p in self.profiles]
        if len(set(ids)) != len(ids):
            raise NetworkError("agent ids must be unique")
        deciders = [p.id for p in self.profiles if p.produces_decision]
        if len(deciders) != 1:
            raise NetworkError(f"exactly one decision-producing agent required, got {deciders}")
        known = set(ids)
        for src, dst in self.graph.edges:
            if src not in known or dst not in known:
                raise NetworkError(f"edge ({src}, {dst}) references unknown agent")
        if sorted(self.schedule.order) != sorted(ids):
            raise NetworkError("schedule must be a permutation of the network agents")
        if self.schedule.order[-1] != deciders[0]:
            raise NetworkError("the decision-producing agent must be scheduled last")
        if self.schedule.human_role is not None and self.schedule.human_role not in known:
            raise NetworkError(f"unknown human role {self.schedule.human_role}")

    def profile(self, agent_id: str) -> AgentProfile:
        for p in self.profiles:
            if p.id == agent_id:
                return p
        raise NetworkError(f"unknown agent id {agent_id}")

    def decider(self) -> AgentProfile:
        return next(p for p in self.profiles if p.produces_decision)

    def with_human_role(self, human_role: str | None) -> "InstitutionNetwork":
        return replace(self, schedule=replace(self.schedule, human_role=human_role))


def default_graph_edges() -> frozenset[tuple[str, str]]:
    """Default information flow: the research supplier feeds the lobbyists, the
    operational institutions, and the high-level institution; every other agent
    reports to the high-level institution."""
    edges = {
        (RESEARCH_SUPPLIER, ENV_NGO),
        (RESEARCH_SUPPLIER, LAND_USER_ASSOC),
        (RESEARCH_SUPPLIER, AGRI_INSTITUTION),
        (RESEARCH_SUPPLIER, ENV_INSTITUTION),
        (RESEARCH_SUPPLIER, HIGH_LEVEL),
    }
    for agent in ROLE_NAMES:
        if agent != HIGH_LEVEL:
            edges.add((agent, HIGH_LEVEL))
    return frozenset(edges)


DEFAULT_SCHEDULE = (
    RESEARCH_SUPPLIER,
    ENV_NGO,
    LAND_USER_ASSOC,
    LAW_CONSULTANT,
    AGRI_INSTITUTION,
    ENV_INSTITUTION,
    HIGH_LEVEL,
)


DECISION_FORMAT_INSTRUCTIONS = (
    "End your reply with your decision as a fenced JSON block with exactly the "
    'keys "share_agri", "share_env" (fractions of the total budget, summing to 1) '
    'and "adj_meat", "adj_pa" (signed fractional adjustments to the meat-supply '
    "and protected-area goals, e.g. 0.05 for +5%)."
)

REPROMPT_NUDGE = (
    "Your previous reply did not contain a readable decision block. "
    + DECISION_FORMAT_INSTRUCTIONS
)


def build_prompt(
    network: InstitutionNetwork,
    agent_id: str,
    transcript: list[AgentMessage],
    phase: int,
    env_digest: str | None = None,
) -> str:
    """Assemble an agent's prompt: persona, visible current-phase messages, and
    (for the research supplier only) the environment data digest."""
    profile = network.profile(agent_id)
    sources = network.graph.sources_for(agent_id)
    parts = [profile.persona_prompt.rstrip(), "", f"You are acting in policy phase {phase}."]
    if profile.role_name == RESEARCH_SUPPLIER and env_digest is not None:
        parts += ["", "Environment data digest (visible only to you):", env_digest.rstrip()]
    visible = [m for m in transcript if m.phase == phase and m.agent in sources]
    parts.append("")
    if visible:
        parts.append("Statements visible to you this phase:")
        for m in visible:
            parts.append(f"[{m.agent}] {m.text}")
    else:
        parts.append("No statements from other agents are visible to you this phase.")
    if profile.produces_decision:
        parts += ["", DECISION_FORMAT_INSTRUCTIONS]
    return "\n".join(parts)


@dataclass
class RoundSuspension:
    """A round paused at the human-controlled agent's slot; resumable."""

    awaiting: str
    position: int
    messages: list[AgentMessage]
    phase: int
    tick: int


@dataclass(frozen=True)
class RoundResult:
    messages: tuple[AgentMessage, ...]
    decision: PolicyDecision
    carried_over: bool


class RoundError(RuntimeError):
    """Backend failure mid-round; carries the partial transcript."""

    def __init__(self, cause: Exception, partial: list[AgentMessage]):
        self.cause = cause
        self.partial = partial
        super().__init__(f"activation round failed: {cause}")


def _decider_turn(
    network: InstitutionNetwork,
    gateway: Gateway,
    agent_id: str,
    prompt: str,
    phase: int,
    tick: int,
    previous_decision: PolicyDecision,
    policy: RetryPolicy,
) -> AgentMessage:
    """Query the decision producer with up to DECISION_RETRIES parse attempts;
    on final failure the previous decision is carried over and flagged."""
    attempt_base = 1
    current_prompt = prompt
    last_text = ""
    for _ in range(DECISION_RETRIES):
        request = ChatRequest(
            system=current_prompt,
            messages=(ChatMessage("user", "State your assessment and your decision."),),
            tag=agent_id,
            phase=phase,
            attempt=attempt_base,
        )
        text, _usage, used = gateway.complete_with_retry(request, policy)
        attempt_base += used
        last_text = text
        try:
            decision = parse_decision(text)
        except (ParseFailure, InvariantViolation):
            current_prompt = prompt + "\n\n" + REPROMPT_NUDGE
            continue
        return AgentMessage(agent=agent_id, phase=phase, tick=tick, text=text, decision=decision)
    return AgentMessage(
        agent=agent_id,
        phase=phase,
        tick=tick,
        text=last_text,
        decision=None,
        carried_over=True,
    )


def activate_round(
    network: InstitutionNetwork,
    gateway: Gateway,
    phase: int,
    tick: int,
    env_digest: str,
    transcript: list[AgentMessage],
    previous_decision: PolicyDecision,
    human_input: str | None = None,
    resume: RoundSuspension | None = None,
    retry_policy: RetryPolicy | None = None,
) -> RoundResult | RoundSuspension:
    """Run one activation round in schedule order.

    If the human-controlled agent's turn arrives without input, returns a
    :class:`RoundSuspension`; call again with ``resume`` and ``human_input`` to
    continue.  Earlier agents' messages are never regenerated on resume.
    """
    network.validate()
    policy = retry_policy or RetryPolicy()
    schedule = network.schedule
    messages: list[AgentMessage] = list(resume.messages) if resume else []
    start = resume.position if resume else 0
    # Transcript view the prompts draw on: prior phases plus this round so far.
    view = list(transcript) + messages

    for position in range(start, len(schedule.order)):
        agent_id = schedule.order[position]
        profile = network.profile(agent_id)
        is_human = schedule.human_role == agent_id
        if is_human:
            if human_input is None:
                return RoundSuspension(
                    awaiting=agent_id,
                    position=position,
                    messages=messages,
                    phase=phase,
                    tick=tick,
                )
            decision = None
            carried = False
            if profile.produces_decision:
                try:
                    decision = parse_decision(human_input)
                except (ParseFailure, InvariantViolation):
                    decision = None
                    carried = True
            msg = AgentMessage(
                agent=agent_id,
                phase=phase,
                tick=tick,
                text=human_input,
                decision=decision,
                authored_by_human=True,
                carried_over=carried,
            )
            human_input = None
        else:
            prompt = build_prompt(network, agent_id, view, phase, env_digest)
            if profile.produces_decision:
                try:
                    msg = _decider_turn(
                        network, gateway, agent_id, prompt, phase, tick,
                        previous_decision, policy,
                    )
                except GatewayError as exc:
                    raise RoundError(exc, messages) from exc
            else:
                request = ChatRequest(
                    system=prompt,
                    messages=(ChatMessage("user", "State your position for this phase."),),
                    tag=agent_id,
                    phase=phase,
                )
                try:
                    text, _usage, _used = gateway.complete_with_retry(request, policy)
                except GatewayError as exc:
                    raise RoundError(exc, messages) from exc
                msg = AgentMessage(agent=agent_id, phase=phase, tick=tick, text=text)
        messages.append(msg)
        view.append(msg)

    final = messages[-1]
    if final.decision is not None:
        decision, carried = final.decision, False
    else:
        decision, carried = previous_decision, True
    return RoundResult(messages=tuple(messages), decision=decision, carried_over=carried)
