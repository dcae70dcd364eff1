"""Web bridge: WebSocket endpoint and static files for the operator UI.

WebSocket sessions exchange the same JSON envelopes as the TCP protocol,
one envelope per text message (the socket framing replaces the length
prefix).  The static mount serves the built operator console bundle.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from ..protocol import WireMessage
from .service import CccService, Session

log = logging.getLogger(__name__)


def build_app(service: CccService, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="safecage supervision hub")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        session = Session(name=f"ws:{websocket.client}")
        service.register_session(session)

        async def pump_out():
            while True:
                msg = await session.queue.get()
                if msg is None:
                    break
                await websocket.send_text(json.dumps(msg.to_dict(), sort_keys=True))

        out_task = asyncio.ensure_future(pump_out())
        try:
            while True:
                text = await websocket.receive_text()
                try:
                    msg = WireMessage.from_dict(json.loads(text))
                except (ValueError, KeyError) as exc:
                    log.warning("bad websocket message: %s", exc)
                    continue
                service.on_message(session, msg)
        except WebSocketDisconnect:
            pass
        finally:
            service.drop_session(session)
            out_task.cancel()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
