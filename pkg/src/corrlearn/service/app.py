"""FastAPI teach service: REST session lifecycle plus a WebSocket carrying
the bidirectional hello/propose/feedback/ack/error/export protocol.

Single-session server: starting a second session while one is active
returns 409. A WebSocket drives the step loop; in timed mode the absence of
feedback within the auto-advance window counts as a skip.
"""

from __future__ import annotations

import asyncio

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from ..harness import ConfigError, ExperimentConfig, config_from_dict
from ..world import MapError
from .schemas import ErrorMessage, StartSessionRequest
from .session import SessionError, TeachSession


def create_app(default_config: ExperimentConfig | None = None) -> FastAPI:
    app = FastAPI(title="corrlearn teach service", version="1")
    app.state.session = None
    app.state.default_config = default_config

    def active(session_id: str) -> TeachSession:
        sess: TeachSession | None = app.state.session
        if sess is None or sess.session_id != session_id:
            raise HTTPException(status_code=404, detail="no such session")
        return sess

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "active_session": getattr(app.state.session, "session_id", None)}

    @app.post("/session")
    def start_session(req: StartSessionRequest):
        if app.state.session is not None:
            raise HTTPException(status_code=409, detail="busy: a session is active")
        try:
            if req.config:
                config = config_from_dict(req.config)
            elif app.state.default_config is not None:
                config = app.state.default_config
            else:
                raise ConfigError("config is required")
            session = TeachSession(config, mode=req.mode, auto_advance_ms=req.auto_advance_ms)
        except (ConfigError, MapError) as e:
            raise HTTPException(status_code=422, detail=str(e)) from e
        app.state.session = session
        return session.hello().model_dump()

    @app.get("/session/{session_id}")
    def session_state(session_id: str):
        return active(session_id).snapshot()

    @app.get("/session/{session_id}/proposal")
    def get_proposal(session_id: str):
        sess = active(session_id)
        msg = sess.current_proposal()
        if msg is None:
            try:
                msg = sess.propose_step()
            except SessionError as e:
                raise HTTPException(status_code=409, detail=e.detail) from e
        return msg.model_dump()

    @app.post("/session/{session_id}/feedback")
    def post_feedback(session_id: str, body: dict):
        sess = active(session_id)
        proposal_id = body.get("proposal_id")
        payload = body.get("feedback")
        if not isinstance(proposal_id, int) or not isinstance(payload, dict):
            raise HTTPException(status_code=422, detail="need proposal_id and feedback")
        try:
            ack = sess.submit_feedback(proposal_id, payload)
        except SessionError as e:
            status = 409 if e.code in ("stale_proposal", "no_proposal") else 422
            raise HTTPException(status_code=status, detail=e.detail) from e
        return ack.model_dump()

    @app.get("/session/{session_id}/export")
    def export_csv(session_id: str):
        return PlainTextResponse(
            active(session_id).export_csv(), media_type="text/csv"
        )

    @app.delete("/session/{session_id}")
    def close_session(session_id: str):
        sess = active(session_id)
        sess.closed = True
        app.state.session = None
        return {"closed": sess.session_id}

    @app.websocket("/session/{session_id}/ws")
    async def session_ws(ws: WebSocket, session_id: str):
        await ws.accept()
        sess: TeachSession | None = app.state.session
        if sess is None or sess.session_id != session_id:
            await ws.send_json(
                ErrorMessage(
                    session=session_id, seq=0, code="no_session",
                    detail="no such session",
                ).model_dump()
            )
            await ws.close()
            return
        await ws.send_json(sess.hello().model_dump())
        try:
            while True:
                if sess.closed:
                    break
                msg = sess.current_proposal()
                if msg is None:
                    try:
                        msg = sess.propose_step()
                    except SessionError as e:
                        await ws.send_json(_error(sess, e))
                        break
                await ws.send_json(msg.model_dump())
                await _feedback_round(ws, sess, msg.proposal_id)
        except WebSocketDisconnect:
            return

    async def _feedback_round(ws: WebSocket, sess: TeachSession, proposal_id: int):
        """Consume inbound messages until the pending proposal resolves."""
        while sess.current_proposal() is not None:
            timeout = (
                sess.auto_advance_ms / 1000.0 if sess.mode == "timed" else None
            )
            try:
                data = await asyncio.wait_for(ws.receive_json(), timeout=timeout)
            except asyncio.TimeoutError:
                ack = sess.submit_feedback(proposal_id, {"kind": "none"}, auto=True)
                await ws.send_json(ack.model_dump())
                return
            kind = data.get("kind") if isinstance(data, dict) else None
            if kind == "feedback":
                try:
                    ack = sess.submit_feedback(
                        data.get("proposal_id"), data.get("feedback") or {}
                    )
                    await ws.send_json(ack.model_dump())
                except SessionError as e:
                    await ws.send_json(_error(sess, e, data.get("proposal_id")))
            elif kind == "export":
                await ws.send_json(sess.export_message().model_dump())
            else:
                await ws.send_json(
                    _error(sess, SessionError("bad_message", f"unknown kind {kind!r}"))
                )

    def _error(sess: TeachSession, e: SessionError, proposal_id=None) -> dict:
        return ErrorMessage(
            session=sess.session_id,
            seq=sess._next_seq(),
            code=e.code,
            detail=e.detail,
            proposal_id=proposal_id if isinstance(proposal_id, int) else None,
        ).model_dump()

    return app
