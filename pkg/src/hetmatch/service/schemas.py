"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class MatchResult(BaseModel):
    b_id: str
    score: float


class DocumentOut(BaseModel):
    id: str
    doctype: str
    components: dict[str, str]


class DocumentSummary(BaseModel):
    id: str
    doctype: str
    preview: str


class PairAssignmentOut(BaseModel):
    a_id: str
    b_id: str
    a_components: dict[str, str]
    b_components: dict[str, str]
    score: float


class LabelIn(BaseModel):
    judge: str = Field(min_length=1)
    a_id: str
    b_id: str
    rating: int


class LabelAck(BaseModel):
    judge: str
    a_id: str
    b_id: str
    rating: int
    ts: int


class ConfigOut(BaseModel):
    a_components: list[str]
    b_components: list[str]
    input_weights: dict[str, float]
    output_weights: dict[str, float]
    threshold: float
    clamp_mode: list[str]


class TrainRequest(BaseModel):
    mode: str
    params: dict = Field(default_factory=dict)


class TrainReportOut(BaseModel):
    mode: str
    best_accuracy: float
    best_loss: float
    iterations: int
    wall_time_s: float
    loss_trajectory: list[float]
    accuracy_trajectory: list[float]
    best_config: ConfigOut
