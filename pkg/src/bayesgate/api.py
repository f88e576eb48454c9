"""HTTP/JSON front end for :class:`~bayesgate.service.ModerationService`."""

from __future__ import annotations

import hmac
from typing import Any, Dict, List, Optional

from fastapi import Depends, FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .service import (
    ModerationService,
    ServiceError,
    SubmissionRequest,
    Unauthorized,
    parse_page,
)
from .store import StoredComment


class SubmissionBody(BaseModel):
    name: str = ""
    surname: Optional[str] = None
    age: Optional[int] = None
    email: str = ""
    text: str = ""


class LexiconChange(BaseModel):
    action: str
    term: Optional[str] = None
    terms: Optional[List[str]] = None


def public_view(c: StoredComment) -> dict:
    # no email, IP or score details on the public route
    return {
        "id": c.id,
        "name": c.identity.name,
        "surname": c.identity.surname,
        "text": c.raw_text,
        "submitted_at": c.submitted_at.isoformat(),
        "status": c.status.value,
    }


def admin_view(c: StoredComment) -> dict:
    return {
        **public_view(c),
        "email": c.identity.email,
        "age": c.identity.age,
        "ip": c.ip,
        "label": c.label.value,
        "content_tokens": list(c.content_tokens),
        "frequency": c.frequency,
        "score": c.breakdown.score_str,
        "breakdown": {k: v for k, v in c.breakdown.to_dict().items() if k != "exact"},
    }


def create_app(
    service: ModerationService,
    admin_token: Optional[str] = None,
    trust_forwarded_for: bool = False,
) -> FastAPI:
    app = FastAPI(title="bayesgate", version="0.1.0")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError) -> JSONResponse:
        body: dict[str, Any] = {"error": exc.code, "detail": exc.message, **exc.extra}
        headers = {}
        if exc.status_code == 429:
            headers["Retry-After"] = str(exc.extra["retry_after"])
        return JSONResponse(body, status_code=exc.status_code, headers=headers)

    def client_ip(request: Request) -> str:
        if trust_forwarded_for:
            forwarded = request.headers.get("x-forwarded-for")
            if forwarded:
                return forwarded.split(",")[0].strip()
        return request.client.host if request.client else "unknown"

    def is_admin(request: Request) -> bool:
        if not admin_token:
            return False
        scheme, _, token = request.headers.get("authorization", "").partition(" ")
        return scheme.lower() == "bearer" and hmac.compare_digest(token.strip(), admin_token)

    def require_admin(request: Request) -> None:
        if not is_admin(request):
            raise Unauthorized("admin bearer token required")

    # -- public -----------------------------------------------------------

    @app.post("/api/v1/comments")
    def submit_comment(body: SubmissionBody, request: Request) -> JSONResponse:
        result = service.submit(
            SubmissionRequest(
                name=body.name, surname=body.surname, age=body.age, email=body.email, text=body.text
            ),
            client_ip(request),
        )
        payload: dict[str, Any] = {
            "comment_id": result.comment.id,
            "verdict": "posted" if result.posted else "quarantined",
            "score": result.verdict.breakdown.score_str,
        }
        if is_admin(request):
            payload["breakdown"] = admin_view(result.comment)["breakdown"]
        return JSONResponse(payload, status_code=201 if result.posted else 202)

    @app.get("/api/v1/comments")
    def list_public(status: Optional[str] = None, page: Optional[str] = None, per_page: Optional[str] = None):
        p, n = parse_page(page, per_page)
        items, total = service.list_comments(status, p, n, public=True)
        return {"items": [public_view(c) for c in items], "page": p, "per_page": n, "total": total}

    # -- admin ------------------------------------------------------------

    admin = [Depends(require_admin)]

    @app.get("/api/v1/admin/comments", dependencies=admin)
    def list_admin(status: Optional[str] = None, page: Optional[str] = None, per_page: Optional[str] = None):
        p, n = parse_page(page, per_page)
        items, total = service.list_comments(status, p, n, public=False)
        return {"items": [admin_view(c) for c in items], "page": p, "per_page": n, "total": total}

    @app.post("/api/v1/admin/comments/{comment_id}/{action}", dependencies=admin)
    def moderate(comment_id: int, action: str):
        return admin_view(service.moderate(comment_id, action))

    @app.get("/api/v1/admin/lexicons/{kind}", dependencies=admin)
    def get_lexicon(kind: str):
        return service.lexicon(kind).to_dict()

    @app.put("/api/v1/admin/lexicons/{kind}", dependencies=admin)
    def put_lexicon(kind: str, change: LexiconChange):
        terms = list(change.terms or [])
        if change.term is not None:
            terms.append(change.term)
        return service.change_lexicon(kind, change.action, terms).to_dict()

    @app.get("/api/v1/admin/config", dependencies=admin)
    def get_config():
        return service.config()

    @app.put("/api/v1/admin/config", dependencies=admin)
    def put_config(body: Dict[str, Any]):
        return service.update_config(body)

    @app.get("/api/v1/admin/stats", dependencies=admin)
    def get_stats():
        return service.stats().to_dict()

    return app

