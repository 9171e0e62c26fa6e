"""WebSocket transport for live sessions, plus optional static UI hosting.

One session per connection, all inbound messages processed in arrival order
by that connection's handler task, wire format one JSON object per text
frame (newline-batched frames are accepted too). A per-session clock task
broadcasts controller states; slow consumers lose broadcasts instead of
stalling the clock.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .errors import ProtocolError
from .guidance import GuidanceConfig
from .protocol import parse_line
from .registration import IcpConfig
from .service import Session

SEND_QUEUE_LIMIT = 256


def create_app(default_chain: Optional[str] = None, rate: float = 100.0,
               static_dir: Optional[str] = None,
               config: Optional[GuidanceConfig] = None,
               icp_config: Optional[IcpConfig] = None,
               rng_seed: int = 0) -> FastAPI:
    app = FastAPI(title="handguide session service")

    @app.websocket("/ws")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        session = Session(config=config or GuidanceConfig(),
                          icp_config=icp_config or IcpConfig(),
                          rng_seed=rng_seed)
        queue: asyncio.Queue[str] = asyncio.Queue(maxsize=SEND_QUEUE_LIMIT)

        def push(messages: list[dict]) -> None:
            for m in messages:
                try:
                    queue.put_nowait(json.dumps(m))
                except asyncio.QueueFull:
                    pass  # drop rather than back-pressure the clock

        if default_chain is not None:
            push(session.handle_message({"type": "load_chain", "path": default_chain}))

        async def writer() -> None:
            while True:
                await ws.send_text(await queue.get())

        async def clock() -> None:
            dt = 1.0 / rate
            loop = asyncio.get_running_loop()
            next_tick = loop.time()
            while True:
                next_tick += dt
                delay = next_tick - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                push(session.tick_clock(dt))

        writer_task = asyncio.create_task(writer())
        clock_task = asyncio.create_task(clock())
        try:
            while True:
                text = await ws.receive_text()
                for line in text.splitlines():
                    if not line.strip():
                        continue
                    try:
                        message = parse_line(line)
                    except ProtocolError as e:
                        push([{"type": "error", "msg": str(e)}])
                        continue
                    # All session access stays on the event loop (single
                    # writer); a long registration delays broadcasts briefly.
                    push(session.handle_message(message))
        except WebSocketDisconnect:
            pass
        finally:
            clock_task.cancel()
            writer_task.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(host: str, port: int, **kwargs) -> None:
    import uvicorn
    uvicorn.run(create_app(**kwargs), host=host, port=port, log_level="warning")
