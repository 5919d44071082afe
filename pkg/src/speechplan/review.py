"""Clinician approval state machine with an append-only audit trail.

Transitions (from PendingReview only):
  approve -> Approved (terminal)
  reject  -> Rejected (terminal)
  modify  -> Revising while modification_count < max_modifications;
             when the scheduled revision completes, back to PendingReview.
Any action in another state, and modify beyond the limit, is InvalidAction.
"""

from __future__ import annotations

from datetime import datetime
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .models import utc_now


class ReviewStatus(str, Enum):
    PENDING_REVIEW = "PendingReview"
    REVISING = "Revising"
    APPROVED = "Approved"
    REJECTED = "Rejected"


TERMINAL_STATUSES = (ReviewStatus.APPROVED, ReviewStatus.REJECTED)


class ReviewActionType(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"
    MODIFY = "modify"


class Effect(str, Enum):
    FINALIZE = "finalize"
    TERMINATE = "terminate"
    SCHEDULE_REVISION = "schedule_revision"


class InvalidAction(ValueError):
    pass


class MissingFeedback(Exception):
    """Deliberately not a ValueError: pydantic would otherwise swallow it
    into a ValidationError inside the model validator."""


class ReviewState(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: ReviewStatus = ReviewStatus.PENDING_REVIEW
    modification_count: int = Field(default=0, ge=0)
    max_modifications: int = 1

    @model_validator(mode="after")
    def _within_limit(self) -> "ReviewState":
        if self.modification_count > self.max_modifications:
            raise ValueError("modification_count exceeds max_modifications")
        return self


class ReviewAction(BaseModel):
    model_config = ConfigDict(frozen=True)

    action: ReviewActionType
    feedback: Optional[str] = None
    clinician_id: str
    timestamp: datetime = Field(default_factory=utc_now)

    @model_validator(mode="after")
    def _feedback_when_modify(self) -> "ReviewAction":
        if self.action is ReviewActionType.MODIFY:
            if not self.feedback or not self.feedback.strip():
                raise MissingFeedback("modify requires non-empty feedback")
        return self


class AuditEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    timestamp: datetime
    clinician_id: str
    action: ReviewActionType
    feedback: Optional[str] = None
    resulting_state: ReviewStatus


def apply_review(state: ReviewState, action: ReviewAction) -> tuple[ReviewState, Effect]:
    """Pure transition function. Raises InvalidAction for anything the truth
    table forbids; callers append the audit entry on success."""
    if state.status in TERMINAL_STATUSES:
        raise InvalidAction(f"terminal state {state.status.value} accepts no actions")
    if state.status is not ReviewStatus.PENDING_REVIEW:
        raise InvalidAction(f"actions are only valid in PendingReview, not {state.status.value}")

    if action.action is ReviewActionType.APPROVE:
        return state.model_copy(update={"status": ReviewStatus.APPROVED}), Effect.FINALIZE
    if action.action is ReviewActionType.REJECT:
        return state.model_copy(update={"status": ReviewStatus.REJECTED}), Effect.TERMINATE

    # modify
    if state.modification_count >= state.max_modifications:
        raise InvalidAction(
            f"modification limit reached ({state.max_modifications}); "
            "only approve or reject remain"
        )
    new_state = state.model_copy(update={
        "status": ReviewStatus.REVISING,
        "modification_count": state.modification_count + 1,
    })
    return new_state, Effect.SCHEDULE_REVISION


def revision_complete(state: ReviewState) -> ReviewState:
    if state.status is not ReviewStatus.REVISING:
        raise InvalidAction("no revision in progress")
    return state.model_copy(update={"status": ReviewStatus.PENDING_REVIEW})


class ReviewMachine:
    """State plus audit log for one session. Transitions are expected to be
    serialized by the owning session (compare-and-set there)."""

    def __init__(self, max_modifications: int = 1):
        self.state = ReviewState(max_modifications=max_modifications)
        self.audit_log: list[AuditEntry] = []

    def submit(self, action: ReviewAction) -> Effect:
        new_state, effect = apply_review(self.state, action)
        self.state = new_state
        self.audit_log.append(AuditEntry(
            timestamp=action.timestamp,
            clinician_id=action.clinician_id,
            action=action.action,
            feedback=action.feedback,
            resulting_state=new_state.status,
        ))
        return effect

    def revision_complete(self) -> None:
        self.state = revision_complete(self.state)
