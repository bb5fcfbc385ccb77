"""HTTP/WebSocket service: hosts the live driving session and the replay
stream, with a small REST surface for health and config introspection."""
from __future__ import annotations

import asyncio
import dataclasses
import time
from typing import Callable, Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import env as envmod
from .bridge import (
    HumanLink,
    LiveCollector,
    encode_message,
    first_takeover_index,
    read_frame_log,
)
from .disturbance import DisturbanceConfig
from .funcapprox.nets import init_policy
from .harness import RunConfig
from .trainer import ReplayBuffer


def build_collector(run_config: RunConfig, seed: int) -> LiveCollector:
    rng = np.random.default_rng(seed)
    scenario = run_config.scenario
    policy = init_policy(scenario.obs_dim, list(run_config.trainer.hidden),
                         2, rng)
    dcfg = DisturbanceConfig(
        dt=scenario.dt, idm=scenario.idm, av=scenario.av,
        literal_sign=run_config.trainer.literal_slowdown_sign,
        literal_edge=run_config.trainer.literal_braking_edge)
    return LiveCollector(scenario=scenario, policy=policy,
                         buffer=ReplayBuffer(run_config.trainer.buffer_capacity),
                         link=HumanLink(), rng=rng, dcfg=dcfg, seed=seed)


def create_app(run_config: Optional[RunConfig] = None, seed: int = 0,
               pace: float = 0.1, replay_log: Optional[str] = None,
               clock: Callable[[], float] = time.monotonic) -> FastAPI:
    """pace is the seconds-per-frame delay; 0 streams as fast as the event
    loop allows (test mode)."""
    run_config = run_config or RunConfig()
    app = FastAPI(title="mentordrive")
    app.state.run_config = run_config
    app.state.collector = build_collector(run_config, seed)
    app.state.driver_connected = False
    app.state.pace = pace
    app.state.replay_log = replay_log
    app.state.clock = clock

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok",
                "config_hash": run_config.hash(),
                "driver_connected": app.state.driver_connected,
                "buffer_size": len(app.state.collector.buffer)}

    @app.get("/config")
    def config() -> dict:
        return dataclasses.asdict(run_config)

    @app.websocket("/drive")
    async def drive(ws: WebSocket) -> None:
        await ws.accept()
        if app.state.driver_connected:
            await ws.close(code=1008, reason="driver already connected")
            return
        app.state.driver_connected = True
        collector: LiveCollector = app.state.collector
        try:
            while True:
                # drain whatever the client has sent, then advance one tick
                while True:
                    try:
                        data = await asyncio.wait_for(ws.receive_bytes(),
                                                      timeout=0.001)
                    except asyncio.TimeoutError:
                        break
                    collector.link.handle_bytes(data, app.state.clock())
                collector.step(app.state.clock())
                await ws.send_bytes(collector.frame())
                if app.state.pace:
                    await asyncio.sleep(app.state.pace)
        except WebSocketDisconnect:
            pass
        finally:
            app.state.driver_connected = False

    @app.websocket("/replay")
    async def replay(ws: WebSocket) -> None:
        await ws.accept()
        if not app.state.replay_log:
            await ws.close(code=1008, reason="no replay log configured")
            return
        frames = read_frame_log(app.state.replay_log)
        start = 0
        if ws.query_params.get("seek") == "takeover":
            idx = first_takeover_index(frames)
            start = idx if idx is not None else len(frames)
        try:
            for frame in frames[start:]:
                await ws.send_bytes(encode_message(frame))
                if app.state.pace:
                    await asyncio.sleep(app.state.pace)
            await ws.send_json({"kind": "end"})
        except WebSocketDisconnect:
            pass

    return app
