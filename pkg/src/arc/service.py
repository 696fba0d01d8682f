"""Checkout sessions over image submissions: identify, bill, override, receipt.

The state machine has two states per session, Open and Closed; every mutating
operation requires Open and operations on one session are serialized by a
per-session lock. Money is integer minor units end to end. Sessions and
receipts are persisted to an append-only JSONL event log that a restarted
service replays.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .dataset import Catalog
from .errors import (
    ArcError,
    BadImage,
    EmptyCart,
    NoObject,
    SessionClosed,
    UnknownItem,
    UnknownSession,
)
from .preprocess import PipelineConfig, preprocess
from .raster import Raster, decode_image

log = logging.getLogger(__name__)

RECEIPT_WIDTH = 40
RECEIPT_HEADER = "ARC CHECKOUT"

#: maps probabilities over catalog ids from a decoded frame
Identifier = Callable[[Raster], np.ndarray]


def format_minor_units(value: int) -> str:
    """Minor units to a 2-decimal string, e.g. 1250 -> '12.50'."""
    sign = "-" if value < 0 else ""
    value = abs(int(value))
    return f"{sign}{value // 100}.{value % 100:02d}"


@dataclass
class CartLine:
    line_no: int
    item_id: int
    name: str
    unit_price: int
    source: str  # "model" | "override"
    confidence: float | None = None

    def to_dict(self) -> dict:
        return {
            "line_no": self.line_no,
            "item_id": self.item_id,
            "name": self.name,
            "unit_price": self.unit_price,
            "unit_price_display": format_minor_units(self.unit_price),
            "source": self.source,
            "confidence": self.confidence,
        }


@dataclass
class IdentifyResult:
    top1: int
    confidence: float
    top5: list[tuple[int, float]]
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "top1": self.top1,
            "confidence": self.confidence,
            "top5": [[i, p] for i, p in self.top5],
            "accepted": self.accepted,
        }


@dataclass
class Session:
    session_id: str
    state: str = "open"  # "open" | "closed"
    lines: list[CartLine] = field(default_factory=list)
    opened_at: float = 0.0
    closed_at: float | None = None

    @property
    def total(self) -> int:
        return sum(line.unit_price for line in self.lines)

    def to_dict(self, currency: str) -> dict:
        return {
            "session_id": self.session_id,
            "state": self.state,
            "lines": [line.to_dict() for line in self.lines],
            "total": self.total,
            "total_display": format_minor_units(self.total),
            "currency": currency,
            "opened_at": self.opened_at,
            "closed_at": self.closed_at,
        }


@dataclass(frozen=True)
class Receipt:
    receipt_no: int
    session_id: str
    lines: tuple[tuple[str, int], ...]  # (name, unit_price)
    total: int
    currency: str
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "receipt_no": self.receipt_no,
            "session_id": self.session_id,
            "lines": [{"name": n, "unit_price": p} for n, p in self.lines],
            "total": self.total,
            "total_display": format_minor_units(self.total),
            "currency": self.currency,
            "timestamp": self.timestamp,
        }


def render_receipt(receipt: Receipt) -> str:
    """Fixed 40-column monospace receipt text."""
    out = [RECEIPT_HEADER.center(RECEIPT_WIDTH).rstrip(), "-" * RECEIPT_WIDTH]
    for name, price in receipt.lines:
        price_str = format_minor_units(price)
        name_width = RECEIPT_WIDTH - len(price_str) - 1
        out.append(f"{name[:name_width]:<{name_width}} {price_str}")
    out.append("-" * RECEIPT_WIDTH)
    total_str = format_minor_units(receipt.total)
    out.append(f"{'TOTAL':<{RECEIPT_WIDTH - len(total_str) - 1}} {total_str}")
    out.append("-" * RECEIPT_WIDTH)
    out.append(f"receipt #{receipt.receipt_no:06d}")
    stamp = datetime.fromtimestamp(receipt.timestamp, tz=timezone.utc)
    out.append(stamp.strftime("%Y-%m-%dT%H:%M:%SZ"))
    return "\n".join(out) + "\n"


class CheckoutService:
    """Session registry plus billing rules; thread-safe per session."""

    def __init__(
        self,
        catalog: Catalog,
        identifier: Identifier | None = None,
        tau: float = 0.5,
        persist_path=None,
        clock: Callable[[], float] = time.time,
    ):
        self.catalog = catalog
        self.identifier = identifier
        self.tau = tau
        self.clock = clock
        self.sessions: dict[str, Session] = {}
        self.receipts: dict[int, Receipt] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._next_receipt_no = 1
        self._persist_path = Path(persist_path) if persist_path else None
        if self._persist_path and self._persist_path.exists():
            self._replay()

    # -- persistence --------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        if self._persist_path is None:
            return
        with open(self._persist_path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self) -> None:
        with open(self._persist_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                ev = json.loads(line)
                kind = ev["type"]
                if kind == "session_opened":
                    self.sessions[ev["session_id"]] = Session(ev["session_id"], opened_at=ev["ts"])
                elif kind == "line_added":
                    s = self.sessions[ev["session_id"]]
                    s.lines.append(
                        CartLine(
                            line_no=ev["line_no"],
                            item_id=ev["item_id"],
                            name=ev["name"],
                            unit_price=ev["unit_price"],
                            source=ev["source"],
                            confidence=ev.get("confidence"),
                        )
                    )
                elif kind == "line_overridden":
                    s = self.sessions[ev["session_id"]]
                    for i, line in enumerate(s.lines):
                        if line.line_no == ev["line_no"]:
                            s.lines[i] = CartLine(
                                line_no=ev["line_no"],
                                item_id=ev["item_id"],
                                name=ev["name"],
                                unit_price=ev["unit_price"],
                                source="override",
                            )
                elif kind == "session_closed":
                    s = self.sessions[ev["session_id"]]
                    s.state = "closed"
                    s.closed_at = ev["ts"]
                    receipt = Receipt(
                        receipt_no=ev["receipt_no"],
                        session_id=ev["session_id"],
                        lines=tuple((l["name"], l["unit_price"]) for l in ev["lines"]),
                        total=ev["total"],
                        currency=ev["currency"],
                        timestamp=ev["ts"],
                    )
                    self.receipts[receipt.receipt_no] = receipt
                    self._next_receipt_no = max(self._next_receipt_no, receipt.receipt_no + 1)
        log.info("replayed %d sessions, %d receipts", len(self.sessions), len(self.receipts))

    # -- session plumbing ----------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self.sessions:
                raise UnknownSession(f"no session {session_id}")
            return self._locks.setdefault(session_id, threading.Lock())

    def _open_session(self, session_id: str) -> Session:
        session = self.sessions[session_id]
        if session.state != "open":
            raise SessionClosed(f"session {session_id} is closed")
        return session

    # -- operations ----------------------------------------------------------

    def begin_session(self) -> Session:
        session = Session(session_id=uuid.uuid4().hex, opened_at=self.clock())
        with self._registry_lock:
            self.sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        self._append_event({"type": "session_opened", "session_id": session.session_id, "ts": session.opened_at})
        return session

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            try:
                return self.sessions[session_id]
            except KeyError:
                raise UnknownSession(f"no session {session_id}") from None

    def identify(self, frame: Raster) -> IdentifyResult:
        if self.identifier is None:
            raise ArcError("service has no identification model configured")
        probs = np.asarray(self.identifier(frame), dtype=np.float64)
        order = np.argsort(-probs, kind="stable")
        top5 = [(int(i), float(probs[i])) for i in order[:5]]
        top1, confidence = top5[0]
        return IdentifyResult(top1=top1, confidence=confidence, top5=top5, accepted=confidence >= self.tau)

    def submit_item(self, session_id: str, image_bytes: bytes) -> tuple[IdentifyResult, Session]:
        """Identify the submitted frame; append a cart line only when the
        confidence clears the threshold. A rejected result leaves the cart
        untouched for the operator to resolve."""
        with self._lock_for(session_id):
            session = self._open_session(session_id)
            frame = decode_image(image_bytes)
            result = self.identify(frame)
            if result.accepted:
                item = self.catalog.by_id(result.top1)
                line = CartLine(
                    line_no=len(session.lines) + 1,
                    item_id=item.item_id,
                    name=item.name,
                    unit_price=item.unit_price,
                    source="model",
                    confidence=result.confidence,
                )
                session.lines.append(line)
                self._append_event(
                    {
                        "type": "line_added",
                        "session_id": session_id,
                        "line_no": line.line_no,
                        "item_id": line.item_id,
                        "name": line.name,
                        "unit_price": line.unit_price,
                        "source": line.source,
                        "confidence": line.confidence,
                    }
                )
            return result, session

    def override_line(self, session_id: str, item_id: int, line_no: int | None = None) -> Session:
        """Replace an existing line's item, or append a new operator line."""
        with self._lock_for(session_id):
            session = self._open_session(session_id)
            try:
                item = self.catalog.by_id(item_id)
            except KeyError:
                raise UnknownItem(f"item {item_id} not in catalog") from None
            if line_no is None:
                line = CartLine(
                    line_no=len(session.lines) + 1,
                    item_id=item.item_id,
                    name=item.name,
                    unit_price=item.unit_price,
                    source="override",
                )
                session.lines.append(line)
                self._append_event(
                    {
                        "type": "line_added",
                        "session_id": session_id,
                        "line_no": line.line_no,
                        "item_id": item.item_id,
                        "name": item.name,
                        "unit_price": item.unit_price,
                        "source": "override",
                        "confidence": None,
                    }
                )
            else:
                found = None
                for i, line in enumerate(session.lines):
                    if line.line_no == line_no:
                        found = i
                        break
                if found is None:
                    raise UnknownItem(f"no cart line {line_no}")
                session.lines[found] = CartLine(
                    line_no=line_no,
                    item_id=item.item_id,
                    name=item.name,
                    unit_price=item.unit_price,
                    source="override",
                )
                self._append_event(
                    {
                        "type": "line_overridden",
                        "session_id": session_id,
                        "line_no": line_no,
                        "item_id": item.item_id,
                        "name": item.name,
                        "unit_price": item.unit_price,
                    }
                )
            return session

    def checkout(self, session_id: str) -> Receipt:
        """Close the session and produce its receipt; an empty cart keeps the
        session open."""
        with self._lock_for(session_id):
            session = self._open_session(session_id)
            if not session.lines:
                raise EmptyCart(f"session {session_id} has no items")
            ts = self.clock()
            with self._registry_lock:
                receipt_no = self._next_receipt_no
                self._next_receipt_no += 1
            receipt = Receipt(
                receipt_no=receipt_no,
                session_id=session_id,
                lines=tuple((line.name, line.unit_price) for line in session.lines),
                total=session.total,
                currency=self.catalog.currency,
                timestamp=ts,
            )
            session.state = "closed"
            session.closed_at = ts
            self.receipts[receipt_no] = receipt
            self._append_event(
                {
                    "type": "session_closed",
                    "session_id": session_id,
                    "ts": ts,
                    "receipt_no": receipt_no,
                    "lines": [{"name": n, "unit_price": p} for n, p in receipt.lines],
                    "total": receipt.total,
                    "currency": receipt.currency,
                }
            )
            return receipt


def network_identifier(checkpoint_path, pipeline_cfg: PipelineConfig) -> Identifier:
    """Identifier backed by the preprocessing pipeline and a trained model."""
    from .nn import network_from_checkpoint

    network, _ = network_from_checkpoint(checkpoint_path)
    network.eval()

    def identify(frame: Raster) -> np.ndarray:
        img = preprocess(frame, pipeline_cfg)
        x = img.transpose(2, 0, 1).astype(np.float32) / 255.0
        return network.forward(x)

    return identify


# ---------------------------------------------------------------------------
# HTTP API
# ---------------------------------------------------------------------------

_STATUS_BY_ERROR = {
    "UnknownSession": 404,
    "UnknownItem": 404,
    "SessionClosed": 409,
    "EmptyCart": 422,
    "NoObject": 422,
    "BadImage": 422,
}


def create_app(service: CheckoutService) -> FastAPI:
    """FastAPI wrapper exposing the checkout session API."""
    app = FastAPI(title="checkout service")
    app.state.service = service

    @app.exception_handler(ArcError)
    async def _domain_error(request: Request, exc: ArcError):
        code = type(exc).__name__
        status = _STATUS_BY_ERROR.get(code, 500)
        return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/catalog")
    def catalog():
        return service.catalog.to_dict()

    @app.post("/sessions", status_code=201)
    def open_session():
        session = service.begin_session()
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return service.get_session(session_id).to_dict(service.catalog.currency)

    @app.post("/sessions/{session_id}/items")
    async def submit_item(session_id: str, request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type not in ("image/png", "image/jpeg"):
            raise BadImage(f"unsupported content type {content_type!r}")
        body = await request.body()
        result, session = service.submit_item(session_id, body)
        return {"result": result.to_dict(), "cart": session.to_dict(service.catalog.currency)}

    @app.post("/sessions/{session_id}/lines")
    async def override_line(session_id: str, request: Request):
        payload = await request.json()
        if "item_id" not in payload:
            raise UnknownItem("request body needs an item_id")
        session = service.override_line(session_id, int(payload["item_id"]), payload.get("line_no"))
        return {"cart": session.to_dict(service.catalog.currency)}

    @app.post("/sessions/{session_id}/checkout")
    def checkout(session_id: str):
        receipt = service.checkout(session_id)
        return {"receipt": receipt.to_dict(), "receipt_text": render_receipt(receipt)}

    @app.get("/receipts/{receipt_no}", response_class=PlainTextResponse)
    def receipt_text(receipt_no: int):
        receipt = service.receipts.get(receipt_no)
        if receipt is None:
            raise UnknownSession(f"no receipt {receipt_no}")
        return render_receipt(receipt)

    return app
