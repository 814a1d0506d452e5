"""Pydantic models for the teach-service wire protocol (schema v1).

Every message carries {v, kind, session, seq}. Server messages are hello,
propose, ack, error, and export; clients send feedback and export requests.
The feedback payload schema is exactly the library's JSON feedback form.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

PROTOCOL_VERSION = 1


class StartSessionRequest(BaseModel):
    # omitted config falls back to the config the server was started with
    config: dict[str, Any] | None = None
    mode: Literal["stepper", "timed"] | None = None
    auto_advance_ms: int | None = Field(default=None, ge=1)


class Envelope(BaseModel):
    v: int = PROTOCOL_VERSION
    kind: str
    session: str
    seq: int


class MapSummary(BaseModel):
    resolution: float
    grid: list[str]
    doors: list[list[float]]
    stairs: list[list[float]]
    chairs: list[list[float]]
    path: list[list[float]]
    start: list[float]


class HelloMessage(Envelope):
    kind: Literal["hello"] = "hello"
    mode: str
    auto_advance_ms: int | None
    k: int
    map: MapSummary
    weights: list[float]
    step_count: int


class Candidate(BaseModel):
    index: int
    curvature: float
    blocked: bool
    score: float
    points: list[list[float]]
    features: list[float]


class ProposeMessage(Envelope):
    kind: Literal["propose"] = "propose"
    proposal_id: int
    t: int
    pose: list[float]
    path_window: list[list[float]]
    ref_point: list[float]
    candidates: list[Candidate]
    chosen_index: int
    preference_alternative: int


class FeedbackMessage(Envelope):
    kind: Literal["feedback"] = "feedback"
    proposal_id: int
    feedback: dict[str, Any]


class AckMessage(Envelope):
    kind: Literal["ack"] = "ack"
    proposal_id: int
    accepted: bool
    updated: bool
    auto: bool = False
    feedback_kind: str
    weights_digest: str
    hinge_loss: float | None
    update_count: int
    correction_count: int
    step_count: int
    reset_count: int


class ErrorMessage(Envelope):
    kind: Literal["error"] = "error"
    code: str
    detail: str
    proposal_id: int | None = None


class ExportRequest(Envelope):
    kind: Literal["export"] = "export"


class ExportMessage(Envelope):
    kind: Literal["export"] = "export"
    csv: str
