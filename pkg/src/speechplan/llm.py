"""Chat-completion gateway: a uniform backend interface over a remote
OpenAI-style endpoint and a scripted deterministic mock, plus the
temperature-scaled softmax used by the mock sampler.
"""

from __future__ import annotations

import math
import random
import time
from typing import Optional, Protocol, Sequence

import httpx
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import Settings


class InvalidInput(ValueError):
    pass


class BackendUnavailable(RuntimeError):
    pass


class ResponseEmpty(RuntimeError):
    pass


def softmax_temperature(z: Sequence[float], temperature: float) -> list[float]:
    """Temperature-scaled softmax over raw logits.

    For T > 0 this is exp(z_i/T) / sum_j exp(z_j/T), computed with
    max-subtraction for numerical stability. T = 0 is defined as the argmax
    limit: probability 1 on the maximum, split uniformly across ties.
    """
    if len(z) == 0:
        raise InvalidInput("logit vector must be non-empty")
    if any(math.isnan(v) or math.isinf(v) for v in z):
        raise InvalidInput("logits must be finite")
    if temperature < 0:
        raise InvalidInput("temperature must be nonnegative")

    zmax = max(z)
    if temperature == 0:
        hits = [1.0 if v == zmax else 0.0 for v in z]
        n = sum(hits)
        return [h / n for h in hits]

    exps = [math.exp((v - zmax) / temperature) for v in z]
    total = sum(exps)
    return [e / total for e in exps]


class ChatMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: str
    content: str

    @field_validator("role")
    @classmethod
    def _known_role(cls, v: str) -> str:
        if v not in ("system", "human"):
            raise ValueError("role must be 'system' or 'human'")
        return v

    @field_validator("content")
    @classmethod
    def _non_empty(cls, v: str) -> str:
        if not v:
            raise ValueError("message content must be non-empty")
        return v


class ChatRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    messages: list[ChatMessage]
    temperature: float = Field(ge=0.0, le=2.0)
    #: Caller-supplied routing tag ("therapy" | "critic" | "refine" |
    #: "human_revision"); the scripted mock keys its response table on it.
    tag: Optional[str] = None

    @model_validator(mode="after")
    def _system_first(self) -> "ChatRequest":
        if not self.messages or self.messages[0].role != "system":
            raise ValueError("first message must have role 'system'")
        return self


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


class ScriptedVariant(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    weight: float = 0.0


class MockChatBackend:
    """Deterministic backend driven by a response table.

    The table maps ``(tag, round)`` to either a single text or a list of
    weighted variants; variants are sampled via ``softmax_temperature`` over
    their weights with a seeded RNG. Round counters are kept per tag and per
    backend instance (one instance per session).
    """

    def __init__(
        self,
        script: dict[tuple[str, int], str | list[ScriptedVariant]],
        seed: int = 0,
    ):
        self.script = script
        self.seed = seed
        self._rng = random.Random(seed)
        self._rounds: dict[str, int] = {}
        self.call_count = 0

    def complete(self, request: ChatRequest) -> str:
        self.call_count += 1
        tag = request.tag or "default"
        rnd = self._rounds.get(tag, 0)
        self._rounds[tag] = rnd + 1

        entry = self.script.get((tag, rnd))
        if entry is None:
            # Fall back to the highest round defined for the tag, so short
            # scripts can serve arbitrarily long loops.
            candidates = [r for (t, r) in self.script if t == tag and r <= rnd]
            if not candidates:
                raise ResponseEmpty(f"no scripted response for tag={tag!r}, round={rnd}")
            entry = self.script[(tag, max(candidates))]

        if isinstance(entry, str):
            return entry
        probs = softmax_temperature([v.weight for v in entry], request.temperature)
        idx = self._rng.choices(range(len(entry)), weights=probs, k=1)[0]
        return entry[idx].text


class RemoteChatBackend:
    """OpenAI-style chat-completions client. Endpoint, model and key come
    from configuration; 2 attempts with exponential backoff."""

    RETRY_ATTEMPTS = 2
    BACKOFF_S = 0.5

    def __init__(self, settings: Settings, client: Optional[httpx.Client] = None):
        if not settings.llm_endpoint:
            raise ValueError("LLM_ENDPOINT is not configured")
        self.settings = settings
        self._client = client or httpx.Client(timeout=settings.llm_timeout_s)

    def complete(self, request: ChatRequest) -> str:
        payload = {
            "model": self.settings.llm_model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system" if m.role == "system" else "user", "content": m.content}
                for m in request.messages
            ],
        }
        headers = {}
        if self.settings.llm_api_key:
            headers["Authorization"] = f"Bearer {self.settings.llm_api_key}"

        last_exc: Exception | None = None
        for attempt in range(self.RETRY_ATTEMPTS):
            try:
                resp = self._client.post(
                    self.settings.llm_endpoint, json=payload, headers=headers
                )
                if resp.status_code in (401, 403):
                    raise BackendUnavailable(f"auth failure ({resp.status_code})")
                resp.raise_for_status()
                body = resp.json()
                text = body["choices"][0]["message"]["content"]
                if not text:
                    raise ResponseEmpty("model returned empty content")
                return text
            except BackendUnavailable:
                raise
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_exc = exc
                if attempt + 1 < self.RETRY_ATTEMPTS:
                    time.sleep(self.BACKOFF_S * 2 ** attempt)
        raise BackendUnavailable(f"chat completion failed after retries: {last_exc}")


def make_chat_backend(settings: Settings, script=None, seed: int = 0) -> ChatBackend:
    """Remote when LLM_ENDPOINT is set; scripted mock otherwise."""
    if settings.llm_endpoint:
        return RemoteChatBackend(settings)
    from .mock_script import default_script
    return MockChatBackend(script or default_script(), seed=seed)
