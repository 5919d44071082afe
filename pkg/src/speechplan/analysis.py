"""Classification, transcription and phonemization backends plus the
aggregation of per-chunk results into an overall picture.

Backends are small interfaces with three implementations each: a
deterministic mock (keyed-hash based, used in tests and offline runs) and a
remote HTTP client. Aggregation is pure.
"""

from __future__ import annotations

import base64
import hashlib
import struct
import time
from collections import Counter
from typing import Optional, Protocol

import httpx
from pydantic import BaseModel, ConfigDict, model_validator

from .models import (
    LABEL_ORDER,
    Chunk,
    ChunkAnalysis,
    OverallClassification,
    Severity,
    StutterLabel,
    top_label_of,
)


class BackendUnavailable(RuntimeError):
    pass


class EmptyInput(ValueError):
    pass


class ClassifierBackend(Protocol):
    def classify(self, chunk: Chunk) -> dict[StutterLabel, float]: ...


class TranscriberBackend(Protocol):
    def transcribe(self, chunk: Chunk) -> str: ...


class PhonemizerBackend(Protocol):
    def phonemize(self, chunk: Chunk) -> list[str]: ...


class SeverityThresholds(BaseModel):
    """Chunk-percentage cutoffs for the three severity levels.

    The defaults (10/25) are non-clinical configuration values, not
    published thresholds.
    """

    model_config = ConfigDict(frozen=True)

    mild_max_pct: float = 10.0
    moderate_max_pct: float = 25.0

    @model_validator(mode="after")
    def _ordered(self) -> "SeverityThresholds":
        if not (0 < self.mild_max_pct < self.moderate_max_pct < 100):
            raise ValueError("thresholds must satisfy 0 < mild < moderate < 100")
        return self

    def severity_for(self, stuttering_pct: float) -> Severity:
        if stuttering_pct <= self.mild_max_pct:
            return Severity.MILD
        if stuttering_pct <= self.moderate_max_pct:
            return Severity.MODERATE
        return Severity.SEVERE


# ---------------------------------------------------------------------------
# Deterministic mocks
# ---------------------------------------------------------------------------

def _keyed_digest(seed: int, payload: bytes, tag: bytes) -> bytes:
    key = seed.to_bytes(8, "little", signed=True)
    return hashlib.blake2b(payload, key=key, person=tag.ljust(16, b"\0")).digest()


class MockClassifier:
    """Hash-derived label distribution; same (seed, chunk bytes) in, same
    simplex point out."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.call_count = 0

    def classify(self, chunk: Chunk) -> dict[StutterLabel, float]:
        self.call_count += 1
        digest = _keyed_digest(self.seed, chunk.samples, b"classify")
        weights = [1 + struct.unpack_from("<Q", digest, 8 * i)[0] for i in range(6)]
        total = sum(weights)
        return {label: w / total for label, w in zip(LABEL_ORDER, weights)}


_MOCK_WORDS = [
    "she", "could", "buy", "a", "minimum", "sometimes", "it's", "fine", "but",
    "we", "do", "not", "own", "look", "at", "that", "then", "this", "no",
]

_MOCK_PHONEMES = [
    "p", "b", "t", "d", "k", "g", "f", "v", "s", "z", "ʃ", "ʒ", "m", "n",
    "l", "r", "w", "j", "i", "e", "a", "o", "u", "ə",
]


class MockTranscriber:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.call_count = 0

    def transcribe(self, chunk: Chunk) -> str:
        self.call_count += 1
        digest = _keyed_digest(self.seed, chunk.samples, b"transcribe")
        n = 3 + digest[0] % 5
        words = [_MOCK_WORDS[digest[1 + i] % len(_MOCK_WORDS)] for i in range(n)]
        return " ".join(words)


class MockPhonemizer:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.call_count = 0

    def phonemize(self, chunk: Chunk) -> list[str]:
        self.call_count += 1
        digest = _keyed_digest(self.seed, chunk.samples, b"phonemize")
        n = 4 + digest[0] % 8
        return [_MOCK_PHONEMES[digest[1 + i] % len(_MOCK_PHONEMES)] for i in range(n)]


def mock_classifier(seed: int = 0) -> MockClassifier:
    return MockClassifier(seed)


# ---------------------------------------------------------------------------
# Remote clients (base64 PCM over HTTPS, JSON back)
# ---------------------------------------------------------------------------

_RETRY_ATTEMPTS = 2
_BACKOFF_S = 0.5


def _post_with_retry(client: httpx.Client, url: str, payload: dict) -> httpx.Response:
    last_exc: Exception | None = None
    for attempt in range(_RETRY_ATTEMPTS):
        try:
            resp = client.post(url, json=payload)
            resp.raise_for_status()
            return resp
        except (httpx.HTTPError, httpx.InvalidURL) as exc:
            last_exc = exc
            if attempt + 1 < _RETRY_ATTEMPTS:
                time.sleep(_BACKOFF_S * 2 ** attempt)
    raise BackendUnavailable(f"request to {url} failed after retries: {last_exc}")


class RemoteClassifier:
    """POSTs base64 PCM and expects a full label->probability map back."""

    def __init__(self, endpoint: str, client: Optional[httpx.Client] = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=30.0)

    def classify(self, chunk: Chunk) -> dict[StutterLabel, float]:
        payload = {
            "audio_b64": base64.b64encode(chunk.samples).decode("ascii"),
            "sample_rate_hz": chunk.sample_rate_hz,
        }
        resp = _post_with_retry(self._client, self.endpoint, payload)
        try:
            raw = resp.json()
            probs = {StutterLabel(k): float(v) for k, v in raw.items()}
        except (ValueError, TypeError, AttributeError) as exc:
            raise BackendUnavailable(f"classifier returned malformed body: {exc}") from exc
        if set(probs) != set(StutterLabel):
            raise BackendUnavailable(
                f"classifier schema mismatch: expected 6 labels, got {sorted(k.value for k in probs)}"
            )
        return probs


class RemoteTranscriber:
    def __init__(self, endpoint: str, client: Optional[httpx.Client] = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=30.0)

    def transcribe(self, chunk: Chunk) -> str:
        payload = {
            "audio_b64": base64.b64encode(chunk.samples).decode("ascii"),
            "sample_rate_hz": chunk.sample_rate_hz,
        }
        resp = _post_with_retry(self._client, self.endpoint, payload)
        try:
            return str(resp.json().get("text", ""))
        except ValueError as exc:
            raise BackendUnavailable(f"transcriber returned malformed body: {exc}") from exc


# ---------------------------------------------------------------------------
# Pipeline operations
# ---------------------------------------------------------------------------

def classify_all(chunks: list[Chunk], backend: ClassifierBackend) -> list[ChunkAnalysis]:
    """One ChunkAnalysis per chunk, order preserved. Remote failures surface
    as BackendUnavailable for the whole batch."""
    if not chunks:
        raise EmptyInput("no chunks to classify")
    analyses = []
    for chunk in chunks:
        probs = backend.classify(chunk)
        analyses.append(ChunkAnalysis(
            chunk_index=chunk.index,
            label_probs=probs,
            top_label=top_label_of(probs),
            confidence=max(probs.values()),
            duration_s=chunk.duration_s,
        ))
    return analyses


def aggregate(
    analyses: list[ChunkAnalysis],
    thresholds: SeverityThresholds | None = None,
) -> OverallClassification:
    """Fold per-chunk analyses into the overall diagnosis.

    stuttering_pct counts chunks whose top label is not Fluent. Primary and
    secondary types come from non-Fluent top-label frequencies; ties break by
    higher summed confidence, then enum order. weighted_confidence is the
    duration-weighted mean of top-label confidence over all chunks.
    """
    if not analyses:
        raise EmptyInput("no analyses to aggregate")
    thresholds = thresholds or SeverityThresholds()

    disfluent = [a for a in analyses if a.top_label is not StutterLabel.FLUENT]
    pct = 100.0 * len(disfluent) / len(analyses)

    counts: Counter[StutterLabel] = Counter(a.top_label for a in disfluent)
    conf_sums: dict[StutterLabel, float] = {}
    for a in disfluent:
        conf_sums[a.top_label] = conf_sums.get(a.top_label, 0.0) + a.confidence

    def sort_key(label: StutterLabel):
        return (-counts[label], -conf_sums[label], LABEL_ORDER.index(label))

    ranked = sorted(counts, key=sort_key)
    primary = ranked[0] if ranked else StutterLabel.FLUENT
    secondary = ranked[1] if len(ranked) > 1 else None

    total_dur = sum(a.duration_s for a in analyses)
    weighted_conf = sum(a.confidence * a.duration_s for a in analyses) / total_dur

    return OverallClassification(
        primary_type=primary,
        secondary_type=secondary,
        weighted_confidence=weighted_conf,
        severity=thresholds.severity_for(pct),
        stuttering_pct=pct,
        problematic_phonemes=phoneme_correlation(analyses),
    )


def phoneme_correlation(analyses: list[ChunkAnalysis]) -> list[tuple[str, float]]:
    """Rank phonemes over-represented in disfluent chunks.

    Add-one smoothed ratio r = (disfluent count + 1) / (fluent count + 1);
    phonemes need r >= 2 and at least 3 total occurrences to be reported.
    At most 10 entries, ratio descending then phoneme ascending.
    """
    disfluent: Counter[str] = Counter()
    fluent: Counter[str] = Counter()
    for a in analyses:
        if not a.phonemes:
            continue
        target = fluent if a.top_label is StutterLabel.FLUENT else disfluent
        target.update(a.phonemes)

    result = []
    for phoneme in set(disfluent) | set(fluent):
        total = disfluent[phoneme] + fluent[phoneme]
        ratio = (disfluent[phoneme] + 1) / (fluent[phoneme] + 1)
        if ratio >= 2.0 and total >= 3:
            result.append((phoneme, ratio))
    result.sort(key=lambda pr: (-pr[1], pr[0]))
    return result[:10]
