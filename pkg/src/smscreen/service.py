"""The screening service: classify, queue for review, record moderator decisions.

State is an in-memory index rebuilt from an append-only JSON-lines event log.
Every mutation is written ahead of the in-memory change, so replaying the log
reconstructs exactly the committed state. Every flag requires an explicit
human decision; the service never auto-dismisses.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

from pydantic import BaseModel

from . import config as kvconfig
from .corpus import LabeledPost, clean_text
from .explain import DISCLAIMER, LlmClient, TokenAttribution, attribute, highlight, narrate
from .features import TfidfModel
from .labels import ClassLabel, parse_label
from .models import LinearClassifier

log = logging.getLogger(__name__)

STATUS_PENDING = "pending"
STATUS_CONFIRMED = "confirmed"
STATUS_DISMISSED = "dismissed"
STATUS_RECATEGORIZED = "recategorized"

ACTION_TO_STATUS = {
    "confirm": STATUS_CONFIRMED,
    "dismiss": STATUS_DISMISSED,
    "recategorize": STATUS_RECATEGORIZED,
}

URGENT = "urgent"
ROUTINE = "routine"

DEFAULT_FLAG_THRESHOLD = 0.5
DEFAULT_URGENT_THRESHOLD = 0.8


class ServiceError(Exception):
    code = "internal_error"


class FlagNotFound(ServiceError):
    code = "flag_not_found"


class AlreadyDecided(ServiceError):
    code = "already_decided"


class InvalidSubmission(ServiceError):
    code = "invalid_submission"


class InvalidDecision(ServiceError):
    code = "invalid_decision"


class EventLogCorrupted(ServiceError):
    code = "event_log_corrupted"


@dataclass(frozen=True)
class Flag:
    id: str
    post_text: str
    clean_text: str
    predicted: ClassLabel
    confidence: float
    highlights: tuple[TokenAttribution, ...]
    narrative: str
    narrative_source: str
    urgency: str
    status: str
    low_confidence: bool
    created_at: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "post_text": self.post_text,
            "clean_text": self.clean_text,
            "predicted": self.predicted.value,
            "confidence": self.confidence,
            "highlights": [
                {"token": h.token, "positions": list(h.occurrences), "contribution": h.contribution}
                for h in self.highlights
            ],
            "narrative": self.narrative,
            "narrative_source": self.narrative_source,
            "urgency": self.urgency,
            "status": self.status,
            "low_confidence": self.low_confidence,
            "created_at": self.created_at,
            "disclaimer": DISCLAIMER,
        }


@dataclass(frozen=True)
class ModeratorDecision:
    flag_id: str
    action: str
    moderator_id: str
    decided_at: str
    new_label: Optional[ClassLabel] = None
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "flag_id": self.flag_id,
            "action": self.action,
            "moderator_id": self.moderator_id,
            "decided_at": self.decided_at,
            "new_label": self.new_label.value if self.new_label else None,
            "note": self.note,
        }


class EventLog:
    """Append-only JSONL event log with dense, strictly increasing sequence numbers."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_seq = 1

    def append(self, event_type: str, data: dict) -> dict:
        with self._lock:
            event = {"seq": self._next_seq, "type": event_type, "data": data}
            line = json.dumps(event, sort_keys=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._next_seq += 1
            return event

    def set_next_seq(self, seq: int) -> None:
        self._next_seq = seq

    @staticmethod
    def read_events(path: str | Path) -> list[dict]:
        """Replay committed events; a truncated final line is dropped with a warning."""
        path = Path(path)
        if not path.exists():
            return []
        raw_lines = path.read_text(encoding="utf-8").split("\n")
        if raw_lines and raw_lines[-1] == "":
            raw_lines.pop()
        events: list[dict] = []
        for i, line in enumerate(raw_lines):
            try:
                event = json.loads(line)
                if not isinstance(event, dict) or "seq" not in event or "type" not in event:
                    raise ValueError("missing seq/type")
            except ValueError as e:
                if i == len(raw_lines) - 1:
                    log.warning("dropping truncated final event log line: %s", e)
                    break
                raise EventLogCorrupted(f"{path}: corrupted event at line {i + 1}: {e}") from None
            expected = len(events) + 1
            if event["seq"] != expected:
                raise EventLogCorrupted(
                    f"{path}: sequence gap at line {i + 1}: expected {expected}, got {event['seq']}"
                )
            events.append(event)
        return events


def _flag_from_event(data: dict) -> Flag:
    return Flag(
        id=data["id"],
        post_text=data["post_text"],
        clean_text=data["clean_text"],
        predicted=parse_label(data["predicted"]),
        confidence=data["confidence"],
        highlights=tuple(
            TokenAttribution(h["token"], tuple(h["positions"]), h["contribution"])
            for h in data["highlights"]
        ),
        narrative=data["narrative"],
        narrative_source=data["narrative_source"],
        urgency=data["urgency"],
        status=STATUS_PENDING,
        low_confidence=data["low_confidence"],
        created_at=data["created_at"],
    )


class ScreenerService:
    """Human-in-the-loop review queue over a classifier and an event log."""

    def __init__(
        self,
        model: LinearClassifier,
        vectorizer: TfidfModel,
        store: EventLog,
        flag_threshold: float = DEFAULT_FLAG_THRESHOLD,
        urgent_threshold: float = DEFAULT_URGENT_THRESHOLD,
        llm_client: Optional[LlmClient] = None,
        highlight_k: int = 5,
        model_version: str = "unversioned",
        clock: Optional[Callable[[], str]] = None,
        id_factory: Optional[Callable[[], str]] = None,
    ):
        self.model = model
        self.vectorizer = vectorizer
        self.store = store
        self.flag_threshold = flag_threshold
        self.urgent_threshold = urgent_threshold
        self.llm_client = llm_client or LlmClient()
        self.highlight_k = highlight_k
        self.model_version = model_version
        self._clock = clock or (lambda: datetime.now(timezone.utc).isoformat())
        self._id_factory = id_factory or (lambda: uuid.uuid4().hex)
        self._state_lock = threading.Lock()
        self._flags: dict[str, Flag] = {}
        self._decisions: dict[str, ModeratorDecision] = {}
        self._order: list[str] = []
        self._recover()

    def _recover(self) -> None:
        events = EventLog.read_events(self.store.path)
        for event in events:
            self._apply(event)
        self.store.set_next_seq(len(events) + 1)

    def _apply(self, event: dict) -> None:
        etype, data = event["type"], event["data"]
        if etype == "FlagCreated":
            flag = _flag_from_event(data)
            self._flags[flag.id] = flag
            self._order.append(flag.id)
        elif etype == "DecisionRecorded":
            decision = ModeratorDecision(
                flag_id=data["flag_id"],
                action=data["action"],
                moderator_id=data["moderator_id"],
                decided_at=data["decided_at"],
                new_label=parse_label(data["new_label"]) if data.get("new_label") else None,
                note=data.get("note"),
            )
            existing = self._decisions.get(decision.flag_id)
            if existing is not None:
                if existing != decision:
                    raise EventLogCorrupted(
                        f"conflicting decisions for flag {decision.flag_id} in event log"
                    )
                return  # replaying the same decision is a no-op
            flag = self._flags.get(decision.flag_id)
            if flag is None:
                raise EventLogCorrupted(f"decision for unknown flag {decision.flag_id}")
            self._decisions[decision.flag_id] = decision
            self._flags[decision.flag_id] = replace(flag, status=ACTION_TO_STATUS[decision.action])
        else:
            raise EventLogCorrupted(f"unknown event type: {etype}")

    def classify_and_flag(self, text: str) -> Flag:
        """Clean, classify, explain, and queue one submission.

        Every submission is queued; thresholds only set urgency and the
        low-confidence marker. Narration never blocks beyond the LLM timeout.
        """
        cleaned = clean_text(text)
        if not cleaned:
            raise InvalidSubmission("text is empty after normalization; nothing to screen")
        post = LabeledPost.make(text, ClassLabel.NON_SUICIDE)  # label unused for inference
        probs = self.model.predict_proba(self.vectorizer.transform(cleaned))
        predicted = self.model.classes[int(probs.argmax())]
        confidence = float(probs.max())
        attrs = attribute(self.model, self.vectorizer, post, predicted)
        tops = highlight(attrs, self.highlight_k)
        narrative, source = narrate(self.llm_client, post, predicted, confidence, tops)
        urgency = (
            URGENT
            if predicted == ClassLabel.SUICIDE and confidence >= self.urgent_threshold
            else ROUTINE
        )
        flag = Flag(
            id=self._id_factory(),
            post_text=text,
            clean_text=cleaned,
            predicted=predicted,
            confidence=confidence,
            highlights=tuple(tops),
            narrative=narrative,
            narrative_source=source,
            urgency=urgency,
            status=STATUS_PENDING,
            low_confidence=confidence < self.flag_threshold,
            created_at=self._clock(),
        )
        with self._state_lock:
            event = self.store.append("FlagCreated", flag.to_dict())
            self._apply(event)
        return self._flags[flag.id]

    def record_decision(
        self,
        flag_id: str,
        action: str,
        moderator_id: str,
        new_label: Optional[ClassLabel] = None,
        note: Optional[str] = None,
    ) -> Flag:
        """Record exactly one decision per flag; the event is persisted first."""
        if action not in ACTION_TO_STATUS:
            raise InvalidDecision(f"unknown action: {action!r}")
        if not moderator_id:
            raise InvalidDecision("moderator_id is required")
        with self._state_lock:
            flag = self._flags.get(flag_id)
            if flag is None:
                raise FlagNotFound(f"no flag with id {flag_id}")
            if flag.status != STATUS_PENDING:
                raise AlreadyDecided(f"flag {flag_id} already {flag.status}")
            if action == "recategorize":
                if new_label is None:
                    raise InvalidDecision("recategorize requires new_label")
                if new_label == flag.predicted:
                    raise InvalidDecision("new_label must differ from the predicted label")
            elif new_label is not None:
                raise InvalidDecision(f"new_label is only valid for recategorize, not {action}")
            decision = ModeratorDecision(
                flag_id=flag_id,
                action=action,
                moderator_id=moderator_id,
                decided_at=self._clock(),
                new_label=new_label,
                note=note,
            )
            event = self.store.append("DecisionRecorded", decision.to_dict())
            self._apply(event)
            return self._flags[flag_id]

    def get_flag(self, flag_id: str) -> Flag:
        flag = self._flags.get(flag_id)
        if flag is None:
            raise FlagNotFound(f"no flag with id {flag_id}")
        return flag

    def get_decision(self, flag_id: str) -> Optional[ModeratorDecision]:
        return self._decisions.get(flag_id)

    def list_queue(
        self,
        statuses: Optional[Iterable[str]] = None,
        order: str = "created_at",
        offset: int = 0,
        limit: int = 50,
    ) -> tuple[list[Flag], int]:
        """Stable listing; urgency ordering puts urgent flags first."""
        if order not in ("created_at", "urgency"):
            raise InvalidSubmission(f"unknown order: {order!r}")
        with self._state_lock:
            flags = [self._flags[i] for i in self._order]
        wanted = set(statuses) if statuses else None
        if wanted is not None:
            flags = [f for f in flags if f.status in wanted]
        if order == "urgency":
            arrival = {f.id: i for i, f in enumerate(flags)}
            flags.sort(key=lambda f: (0 if f.urgency == URGENT else 1, arrival[f.id]))
        total = len(flags)
        return flags[offset:offset + limit], total

    def audit_decided_flags(self) -> bool:
        """Every non-pending flag must have a persisted decision event."""
        for flag_id, flag in self._flags.items():
            if flag.status != STATUS_PENDING and flag_id not in self._decisions:
                return False
        return True


@dataclass
class ServiceConfig:
    port: int = 8000
    log_path: str = "screener_events.jsonl"
    classifier_path: str = ""
    vectorizer_path: str = ""
    flag_threshold: float = DEFAULT_FLAG_THRESHOLD
    urgent_suicide_threshold: float = DEFAULT_URGENT_THRESHOLD
    llm_endpoint: str = ""
    llm_enabled: bool = False
    llm_timeout_ms: int = 5000
    llm_api_key_env: str = ""
    llm_model_name: str = ""
    static_dir: str = ""

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        values = kvconfig.load_kv(path)
        return cls(
            port=int(values.get("server.port", 8000)),
            log_path=values.get("store.log_path", "screener_events.jsonl"),
            classifier_path=values.get("model.classifier_path", ""),
            vectorizer_path=values.get("model.vectorizer_path", ""),
            flag_threshold=float(values.get("thresholds.flag", DEFAULT_FLAG_THRESHOLD)),
            urgent_suicide_threshold=float(
                values.get("thresholds.urgent_suicide", DEFAULT_URGENT_THRESHOLD)
            ),
            llm_endpoint=values.get("llm.endpoint", ""),
            llm_enabled=kvconfig.parse_bool(values.get("llm.enabled", "false")),
            llm_timeout_ms=int(values.get("llm.timeout_ms", 5000)),
            llm_api_key_env=values.get("llm.api_key_env", ""),
            llm_model_name=values.get("llm.model_name", ""),
            static_dir=values.get("server.static_dir", ""),
        )

    def build_llm_client(self) -> LlmClient:
        api_key = os.environ.get(self.llm_api_key_env) if self.llm_api_key_env else None
        return LlmClient(
            endpoint=self.llm_endpoint,
            model_name=self.llm_model_name,
            timeout=self.llm_timeout_ms / 1000.0,
            enabled=self.llm_enabled,
            api_key=api_key,
        )


def service_from_config(cfg: ServiceConfig) -> ScreenerService:
    import hashlib

    model = LinearClassifier.load(cfg.classifier_path)
    vectorizer = TfidfModel.load(cfg.vectorizer_path)
    digest = hashlib.sha256(Path(cfg.classifier_path).read_bytes()).hexdigest()[:12]
    return ScreenerService(
        model=model,
        vectorizer=vectorizer,
        store=EventLog(cfg.log_path),
        flag_threshold=cfg.flag_threshold,
        urgent_threshold=cfg.urgent_suicide_threshold,
        llm_client=cfg.build_llm_client(),
        model_version=digest,
    )


class ClassifyBody(BaseModel):
    text: str


class DecisionBody(BaseModel):
    action: str
    moderator_id: str
    new_label: Optional[str] = None
    note: Optional[str] = None


def create_app(service: ScreenerService, static_dir: str | Path | None = None):
    """FastAPI app exposing the /api/v1 review workflow."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="Social Media Screener", version="0.1.0")
    app.state.service = service

    def error_response(status: int, exc: ServiceError) -> JSONResponse:
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": str(exc)}
        )

    @app.exception_handler(ServiceError)
    async def handle_service_error(request: Request, exc: ServiceError):
        status = {
            FlagNotFound: 404,
            AlreadyDecided: 409,
            InvalidSubmission: 400,
            InvalidDecision: 400,
        }.get(type(exc), 500)
        return error_response(status, exc)

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "model_version": service.model_version}

    @app.post("/api/v1/classify", status_code=201)
    def classify(body: ClassifyBody):
        flag = service.classify_and_flag(body.text)
        return flag.to_dict()

    @app.get("/api/v1/queue")
    def queue(
        status: Optional[str] = None,
        order: str = "created_at",
        offset: int = 0,
        limit: int = 50,
    ):
        statuses = [s for s in (status or "").split(",") if s] or None
        flags, total = service.list_queue(statuses=statuses, order=order, offset=offset, limit=limit)
        return {"flags": [f.to_dict() for f in flags], "total": total}

    @app.get("/api/v1/flags/{flag_id}")
    def get_flag(flag_id: str):
        return service.get_flag(flag_id).to_dict()

    @app.post("/api/v1/flags/{flag_id}/decision")
    def decide(flag_id: str, body: DecisionBody):
        new_label = parse_label(body.new_label) if body.new_label else None
        flag = service.record_decision(
            flag_id=flag_id,
            action=body.action,
            moderator_id=body.moderator_id,
            new_label=new_label,
            note=body.note,
        )
        return flag.to_dict()

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app
