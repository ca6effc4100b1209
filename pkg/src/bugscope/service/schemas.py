"""Pydantic request/response models for the review API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class TaxonomyNodeOut(BaseModel):
    code: str
    name: str
    level: str
    parent: Optional[str] = None
    description: str


class RunSummaryOut(BaseModel):
    run_id: str
    created_at: str
    record_count: int


class LabelStateOut(BaseModel):
    label_path: Optional[str] = None
    provenance: Optional[str] = None
    confidence: Optional[float] = None
    version: int = 0
    review_count: int = 0
    reviewers: list[str] = Field(default_factory=list)
    disagreement: bool = False
    finalized: bool = False


class FailureSummaryOut(BaseModel):
    sample_key: str
    task_id: str
    model_id: str
    iteration: int
    task_excerpt: str = ""
    label_path: Optional[str] = None
    primary: Optional[str] = None
    suggestion_rationale: Optional[str] = None
    confidence: Optional[float] = None
    review_count: int = 0
    disagreement: bool = False
    finalized: bool = False


class FailurePageOut(BaseModel):
    items: list[FailureSummaryOut]
    total: int
    page: int
    page_size: int


class LabelEventOut(BaseModel):
    version: int
    label_path: str
    reviewer_id: str
    note: Optional[str] = None
    suggestions_revealed: Optional[bool] = None
    created_at: str


class RootCauseOut(BaseModel):
    summary: str
    explanation: str
    placeholder: bool = False


class TestVerdictOut(BaseModel):
    test_id: str
    verdict: str


class SampleDetailOut(BaseModel):
    sample_key: str
    task_id: str
    model_id: str
    iteration: int
    task_excerpt: str = ""
    code: str
    overall: Optional[str] = None
    per_test: list[TestVerdictOut] = Field(default_factory=list)
    diagnostics: str = ""
    stdout: str = ""
    metrics: Optional[dict] = None
    suggestion_rationale: Optional[str] = None
    root_causes: Optional[list[RootCauseOut]] = None
    state: LabelStateOut
    history: list[LabelEventOut] = Field(default_factory=list)


class LabelSubmissionIn(BaseModel):
    label_path: str
    reviewer_id: str
    base_version: int
    note: Optional[str] = None
    suggestions_revealed: Optional[bool] = None


class DisagreementOut(BaseModel):
    sample_key: str
    task_id: str
    model_id: str
    iteration: int
    conflicting_paths: list[str]
    reviewers: list[str]


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorOut(BaseModel):
    error: ErrorBody
