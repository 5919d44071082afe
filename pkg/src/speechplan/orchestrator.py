"""The generate -> critique -> refine loop.

The loop runs a fixed number of rounds (no semantic convergence test) and
records every prompt/output pair, including failed parse attempts. Invalid
model JSON is retried by re-prompting with the parse error appended; after
the retry budget is spent the loop either fails (initial generation) or
keeps the last valid plan and marks the result degraded (refinement).
"""

from __future__ import annotations

import json
import re

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .llm import ChatBackend, ChatMessage, ChatRequest
from .models import (
    GenerationRecord,
    GenerationRole,
    TherapyPlan,
    detect_red_flag,
    validate_plan,
)
from .prompts import (
    PromptContext,
    render_critic_prompt,
    render_human_revision_prompt,
    render_refinement_prompt,
    render_therapy_prompt,
)


class ParseFailure(ValueError):
    def __init__(self, kind: str, detail: str):
        self.kind = kind  # "syntax" | "schema"
        self.detail = detail
        super().__init__(f"{kind}: {detail}")


class GenerationFailed(RuntimeError):
    pass


class RefinementFailed(RuntimeError):
    def __init__(self, round_index: int, detail: str):
        self.round_index = round_index
        super().__init__(f"refinement failed at round {round_index}: {detail}")


class OrchestrationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    rounds: int = Field(default=2, ge=0, le=5)
    therapy_temperature: float = Field(default=0.3, ge=0.0, le=2.0)
    critic_temperature: float = Field(default=0.0, ge=0.0, le=2.0)
    parse_retries: int = 2


class LoopResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    final_plan: TherapyPlan
    history: list[GenerationRecord]
    red_flag: bool
    degraded: bool = False


_FENCE_RE = re.compile(r"^\s*```[a-zA-Z]*\s*\n(.*)\n\s*```\s*$", re.DOTALL)


def parse_plan_output(raw: str) -> TherapyPlan:
    """Parse model output into a validated TherapyPlan.

    Surrounding markdown code fences are tolerated and stripped. Succeeds
    iff the JSON is well-formed and validate_plan reports no violations.
    """
    text = raw
    fence = _FENCE_RE.match(text)
    if fence:
        text = fence.group(1)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseFailure("syntax", str(exc)) from exc
    if not isinstance(data, dict):
        raise ParseFailure("schema", "top-level value must be a JSON object")
    try:
        plan = TherapyPlan.model_validate(data)
    except ValidationError as exc:
        raise ParseFailure("schema", str(exc)) from exc
    violations = validate_plan(plan)
    if violations:
        first = violations[0]
        raise ParseFailure("schema", f"{first.code.value} at {first.path}")
    return plan


class _Loop:
    """Mutable loop state: history recording plus completion counting."""

    def __init__(self, backend: ChatBackend, config: OrchestrationConfig):
        self.backend = backend
        self.config = config
        self.history: list[GenerationRecord] = []

    def _record(self, role: GenerationRole, system: str, human: str,
                raw: str, parsed_ok: bool) -> None:
        self.history.append(GenerationRecord(
            round=len(self.history),
            role=role,
            prompt_system=system,
            prompt_human=human,
            raw_output=raw,
            parsed_ok=parsed_ok,
        ))

    def complete_text(self, role: GenerationRole, system: str, human: str,
                      temperature: float, tag: str) -> str:
        request = ChatRequest(
            messages=[ChatMessage(role="system", content=system),
                      ChatMessage(role="human", content=human)],
            temperature=temperature,
            tag=tag,
        )
        raw = self.backend.complete(request)
        self._record(role, system, human, raw, parsed_ok=True)
        return raw

    def complete_plan(self, role: GenerationRole, system: str, human: str,
                      temperature: float, tag: str) -> TherapyPlan:
        """Complete and parse, re-prompting with the parse error on failure.
        Raises ParseFailure once the retry budget is exhausted."""
        attempt_human = human
        last_error: ParseFailure | None = None
        for _ in range(self.config.parse_retries + 1):
            request = ChatRequest(
                messages=[ChatMessage(role="system", content=system),
                          ChatMessage(role="human", content=attempt_human)],
                temperature=temperature,
                tag=tag,
            )
            raw = self.backend.complete(request)
            try:
                plan = parse_plan_output(raw)
            except ParseFailure as exc:
                last_error = exc
                self._record(role, system, attempt_human, raw, parsed_ok=False)
                attempt_human = (
                    human
                    + "\n\nYour previous response could not be used "
                    f"({exc.kind} error: {exc.detail}). "
                    "Output ONLY the corrected JSON object."
                )
                continue
            self._record(role, system, attempt_human, raw, parsed_ok=True)
            return plan
        assert last_error is not None
        raise last_error


def run_loop(ctx: PromptContext, config: OrchestrationConfig,
             backend: ChatBackend, on_stage=None) -> LoopResult:
    """Initial generation followed by ``rounds`` critic/refine cycles.

    Issues exactly 1 + 2*rounds completions when no parse retries occur.
    A refinement that never parses aborts the loop, keeping the last valid
    plan and marking the result degraded. ``on_stage(stage, round)`` is
    invoked before each phase for progress telemetry.
    """
    loop = _Loop(backend, config)
    notify = on_stage or (lambda stage, rnd: None)
    notify("generating", 0)

    system, human = render_therapy_prompt(ctx)
    try:
        plan = loop.complete_plan(GenerationRole.THERAPY_INITIAL, system, human,
                                  config.therapy_temperature, "therapy")
    except ParseFailure as exc:
        raise GenerationFailed(f"initial generation never parsed: {exc}") from exc

    degraded = False
    for rnd in range(config.rounds):
        notify("critiquing", rnd)
        c_system, c_human = render_critic_prompt(plan, ctx)
        critic_text = loop.complete_text(GenerationRole.CRITIC, c_system, c_human,
                                         config.critic_temperature, "critic")
        notify("refining", rnd)
        r_system, r_human = render_refinement_prompt(plan, critic_text, ctx)
        try:
            plan = loop.complete_plan(GenerationRole.REFINE, r_system, r_human,
                                      config.therapy_temperature, "refine")
        except ParseFailure:
            degraded = True
            break

    return LoopResult(
        final_plan=plan,
        history=loop.history,
        red_flag=detect_red_flag(plan.to_canonical_json()),
        degraded=degraded,
    )


def apply_human_revision(plan: TherapyPlan, feedback: str, ctx: PromptContext,
                         backend: ChatBackend,
                         config: OrchestrationConfig | None = None) -> LoopResult:
    """One revision pass driven by clinician feedback."""
    if not feedback or not feedback.strip():
        raise ValueError("clinician feedback must be non-empty")
    config = config or OrchestrationConfig()
    loop = _Loop(backend, config)

    prompt = render_human_revision_prompt(plan, feedback, ctx.classification)
    system = "You are an expert clinical speech-language pathologist."
    try:
        revised = loop.complete_plan(GenerationRole.HUMAN_REVISION, system, prompt,
                                     config.therapy_temperature, "human_revision")
    except ParseFailure as exc:
        raise RefinementFailed(0, str(exc)) from exc

    return LoopResult(
        final_plan=revised,
        history=loop.history,
        red_flag=detect_red_flag(revised.to_canonical_json()),
    )
