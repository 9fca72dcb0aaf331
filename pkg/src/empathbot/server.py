"""HTTP surface of the runtime: six endpoints under /v1.

POST /v1/respond takes raw PNG or JPEG bytes in the request body (plus an
optional X-Sidecar-Label header that only the mock backend honors) and runs
one turn.  GET /v1/state snapshots the robot; GET /v1/stream pushes state
frames as server-sent events at the configured frame rate with monotonic
deadline pacing, so the long-run rate stays accurate regardless of per-frame
jitter.  Feedback, history, and catalog round out the API for UI clients.
"""

from __future__ import annotations

import asyncio
import json
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from starlette.middleware.cors import CORSMiddleware

from .affect import AffectLabel
from .images import ImageError, ImageInput, ImageSource
from .leds import PALETTE_MAX, PALETTE_MIN
from .motion import catalog
from .runtime import Runtime, RuntimeConfig, RobotState, UnknownTurn
from .vlm import BackendError

__all__ = ["SIDECAR_HEADER", "create_app", "serve"]

SIDECAR_HEADER = "X-Sidecar-Label"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def _pose_view(state: RobotState) -> dict:
    return {"x": state.pose.x, "y": state.pose.y, "theta": state.pose.theta}


def state_view(state: RobotState) -> dict:
    return {
        "turn_id": state.turn_id,
        "emoji": state.emoji,
        "palette": state.palette.to_hex(),
        "mode": {"kind": state.mode.kind.value, "rate_hz": state.mode.rate_hz},
        "action": {"name": state.action_name, "elapsed_s": state.action_elapsed_s},
        "pose": _pose_view(state),
        "led": {"t": state.led_frame.t, "pixels": [c.to_hex() for c in state.led_frame.pixels]},
    }


def frame_view(state: RobotState, t: float) -> dict:
    return {
        "t": t,
        "turn_id": state.turn_id,
        "emoji": state.emoji,
        "pixels": [c.to_hex() for c in state.led_frame.pixels],
        "pose": _pose_view(state),
    }


def create_app(runtime: Runtime | None = None) -> FastAPI:
    runtime = runtime if runtime is not None else Runtime()
    app = FastAPI(title="empathbot", docs_url=None, redoc_url=None)
    app.state.runtime = runtime
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/v1/respond")
    async def respond(request: Request):
        sidecar = None
        raw_label = request.headers.get(SIDECAR_HEADER)
        if raw_label:
            try:
                sidecar = AffectLabel.parse(raw_label)
            except ValueError as exc:
                return _error(400, "E_BAD_LABEL", str(exc))
        body = await request.body()
        try:
            image = ImageInput.from_bytes(body, ImageSource.CAMERA)
        except ImageError as exc:
            return _error(400, "E_BAD_IMAGE", str(exc))
        try:
            state = await asyncio.to_thread(runtime.step, image, sidecar)
        except BackendError as exc:
            return _error(502, "E_BACKEND", str(exc))
        record = runtime.history.get(state.turn_id)
        response = record.response
        return {
            "turn_id": state.turn_id,
            "emoji": response.emoji,
            "motion": response.motion,
            "palette": response.palette.to_hex(),
            "explanation": response.explanation,
            "repaired": record.repaired,
            "fell_back": record.fell_back,
            "violations": list(record.violation_codes),
        }

    @app.get("/v1/state")
    async def state():
        return state_view(runtime.state())

    @app.get("/v1/stream")
    async def stream(request: Request, frames: int | None = None):
        fps = runtime.config.fps
        period = 1.0 / fps

        async def gen():
            sent = 0
            start = time.monotonic()
            deadline = start
            while frames is None or sent < frames:
                if await request.is_disconnected():
                    break
                now = time.monotonic()
                payload = json.dumps(
                    frame_view(runtime.state(), now - start), ensure_ascii=False
                )
                yield f"data: {payload}\n\n"
                sent += 1
                deadline += period
                delay = deadline - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)

        return StreamingResponse(
            gen(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    @app.post("/v1/feedback")
    async def feedback(request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError:
            return _error(400, "E_FEEDBACK_FORMAT", "body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "E_FEEDBACK_FORMAT", "body must be a JSON object")
        turn_id, score = body.get("turn_id"), body.get("score")
        if not isinstance(turn_id, int) or isinstance(turn_id, bool):
            return _error(400, "E_FEEDBACK_FORMAT", "turn_id must be an integer")
        if not isinstance(score, int) or isinstance(score, bool):
            return _error(400, "E_FEEDBACK_FORMAT", "score must be an integer")
        try:
            runtime.feedback(turn_id, score)
        except UnknownTurn:
            return _error(404, "E_UNKNOWN_TURN", f"no turn {turn_id}")
        except ValueError as exc:
            return _error(400, "E_FEEDBACK_FORMAT", str(exc))
        return {"ok": True, "turn_id": turn_id, "score": score}

    @app.get("/v1/history")
    async def history(offset: int = 0, limit: int = 50):
        if offset < 0 or limit < 1:
            return _error(400, "E_PAGE", "offset must be >= 0 and limit >= 1")
        records = runtime.history.records()
        page = records[offset : offset + limit]
        views = []
        for r in page:
            view = r.to_event()
            del view["type"]
            view["user_feedback"] = r.user_feedback
            views.append(view)
        return {"total": len(records), "offset": offset, "limit": limit, "records": views}

    @app.get("/v1/catalog")
    async def catalog_view():
        tables = runtime.tables
        actions = runtime.actions if runtime.actions is not None else catalog()
        return {
            "actions": [
                {"name": a.name, "description": a.description, "duration_s": a.duration_s}
                for a in actions
            ],
            "affects": [
                {
                    "name": label.value,
                    "valence": tables.anchor_table.anchor(label).valence,
                    "arousal": tables.anchor_table.anchor(label).arousal,
                    "hue_bands": [
                        {
                            "lo": band.lo,
                            "hi": band.hi,
                            "min_saturation": tables.anchor_table.hues[label].min_saturation,
                            "max_value": tables.anchor_table.hues[label].max_value,
                        }
                        for band in tables.anchor_table.hues[label].bands
                    ],
                    "preferred_actions": sorted(tables.anchor_table.actions[label]),
                }
                for label in AffectLabel
            ],
            "emoji": [
                {
                    "glyph": e.glyph,
                    "name": e.name,
                    "valence": e.va.valence,
                    "arousal": e.va.arousal,
                }
                for e in tables.emoji.values()
            ],
            "strip_len": runtime.config.strip_len,
            "fps": runtime.config.fps,
            "palette_len": {"min": PALETTE_MIN, "max": PALETTE_MAX},
        }

    return app


def serve(
    config: RuntimeConfig | None = None,
    host: str = "127.0.0.1",
    port: int = 8400,
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(Runtime(config))
    uvicorn.run(app, host=host, port=port, log_level="info")
