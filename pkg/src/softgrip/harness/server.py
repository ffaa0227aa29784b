"""Websocket bridge between one environment session and browser clients.

The simulation runs in a worker thread that owns all mutable state; the
asyncio side only passes messages. The first connected client drives (its
action messages are applied, lock-step: one action per broadcast frame);
later clients are view-only. Slow clients get frames dropped, never the
simulation stalled.
"""

from __future__ import annotations

import asyncio
import json
import os
import queue
import threading

import numpy as np

from ..config import TrainConfig
from ..demos import DemoTrajectory, record_demo
from ..env import SOFT, GripperEnv

FRAME_POINT_BUDGET = 512


class SimSession:
    """Thread confining the environment; commands in, frames out."""

    def __init__(self, config: TrainConfig, demo_dir):
        self.config = config
        self.env = GripperEnv(config.env)
        self.demo_dir = demo_dir
        self.commands = queue.Queue()
        self.frames = queue.Queue(maxsize=8)  # bounded: drop-oldest on overflow
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._seed = 0
        self._recording = None  # list of (action, reward, done) while recording
        self._episode = None

    def start(self):
        self._thread.start()

    def stop(self):
        self._stop.set()
        self.commands.put({"type": "control", "cmd": "noop"})
        self._thread.join(timeout=5)

    def _reset(self, seed=None):
        if seed is not None:
            self._seed = int(seed)
        obs = self.env.reset(seed=self._seed, mode=SOFT, noise=True)
        self._recording = False
        self._episode = {"t": 0, "obs": obs, "done": False,
                         "observations": [obs], "actions": [], "rewards": [],
                         "dones": []}

    def _frame(self, reward=0.0, info=None):
        env = self.env
        pts = env.solver.particles.x
        vm = env.solver.particles.vm
        if pts.shape[0] > FRAME_POINT_BUDGET:
            idx = np.linspace(0, pts.shape[0] - 1, FRAME_POINT_BUDGET).astype(int)
            pts = pts[idx]
            vm = vm[idx]
        stress = (info["stress"] if info is not None
                  else env.tracker.snapshot()).as_log_dict()
        return {
            "type": "state",
            "step": self._episode["t"],
            "points": np.round(pts, 5).tolist(),
            "vm": np.round(vm, 1).tolist(),
            "ee": np.round(self.env.gripper.pose7(), 5).tolist(),
            "width": round(float(env.gripper.width), 5),
            "reward": round(float(reward), 5),
            "stress": stress,
            "phase": "soft",
            "done": self._episode["done"],
            "recording": self._recording,
            "recorded_steps": len(self._episode["actions"]),
            "goal": np.round(env._goal, 5).tolist(),
            "seed": self._seed,
        }

    def _save_recording(self):
        if (not self._recording or not self._episode["actions"]
                or not self.env.episode_success):
            return {"type": "error", "message": "no successful recording to save"}
        import datetime
        import uuid

        ep = self._episode
        header = {
            "demo_id": str(uuid.uuid4()),
            "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "steps": len(ep["actions"]),
            **self.env.episode_header(),
        }
        demo = DemoTrajectory(header, ep["actions"], ep["rewards"], ep["dones"],
                              ep["observations"])
        os.makedirs(self.demo_dir, exist_ok=True)
        path = os.path.join(self.demo_dir, f"demo_{header['demo_id'][:8]}.jsonl")
        demo.save(path)
        return {"type": "saved", "path": path, "steps": len(demo)}

    def _apply(self, msg):
        if msg["type"] == "action" and not self._episode["done"]:
            action = np.zeros(7)
            action[0:3] = np.clip(msg.get("dx", [0, 0, 0]), -1, 1)
            action[3:6] = np.clip(msg.get("dtheta", [0, 0, 0]), -1, 1)
            action[6] = float(np.clip(msg.get("dg", 0.0), -1, 1))
            ep = self._episode
            obs, reward, done, info = self.env.step(action)
            ep["t"] += 1
            ep["obs"] = obs
            ep["done"] = done
            ep["observations"].append(obs)
            ep["actions"].append(action)
            ep["rewards"].append(float(reward))
            ep["dones"].append(bool(info["terminal"]))
            return self._frame(reward, info)
        if msg["type"] == "control":
            cmd = msg.get("cmd")
            if cmd == "reset":
                self._reset(seed=msg.get("arg"))
                return self._frame()
            if cmd == "record_start":
                # recording always starts from a fresh, replayable reset
                self._reset(seed=msg.get("arg", self._seed + 1))
                self._recording = True
                return self._frame()
            if cmd == "record_stop":
                self._recording = False
                return self._frame()
            if cmd == "save":
                result = self._save_recording()
                self._recording = False
                return result
            if cmd == "frame":
                # current state on demand (sent when a client connects)
                return self._frame()
            if cmd == "noop":
                return None
        return {"type": "error", "message": f"malformed message: {msg}"}

    def _run(self):
        self._reset()
        self._push(self._frame())
        while not self._stop.is_set():
            try:
                msg = self.commands.get(timeout=0.5)
            except queue.Empty:
                continue
            try:
                frame = self._apply(msg)
            except Exception as exc:  # session survives bad input
                frame = {"type": "error", "message": str(exc)}
            if frame is not None:
                self._push(frame)

    def _push(self, frame):
        while True:
            try:
                self.frames.put_nowait(frame)
                return
            except queue.Full:
                try:
                    self.frames.get_nowait()  # drop-oldest
                except queue.Empty:
                    pass


async def _ws_handler(websocket, session, clients):
    import websockets

    role = "driver" if not clients else "viewer"
    clients.append(websocket)
    await websocket.send(json.dumps({"type": "hello", "role": role}))
    session.commands.put({"type": "control", "cmd": "frame"})
    try:
        async for raw in websocket:
            try:
                msg = json.loads(raw)
                if not isinstance(msg, dict) or "type" not in msg:
                    raise ValueError("message must be an object with a type")
            except (json.JSONDecodeError, ValueError) as exc:
                await websocket.send(json.dumps({"type": "error",
                                                 "message": str(exc)}))
                continue
            if role != "driver" and msg.get("type") != "ping":
                await websocket.send(json.dumps(
                    {"type": "error", "message": "view-only client"}))
                continue
            session.commands.put(msg)
    except websockets.ConnectionClosed:
        pass
    finally:
        clients.remove(websocket)


async def _broadcaster(session, clients, poll_interval=0.02):
    # polled rather than executor-blocked so shutdown never strands a thread
    while True:
        try:
            frame = session.frames.get_nowait()
        except queue.Empty:
            await asyncio.sleep(poll_interval)
            continue
        data = json.dumps(frame)
        for ws in list(clients):
            try:
                await asyncio.wait_for(ws.send(data), timeout=1.0)
            except Exception:
                pass


async def serve_async(config: TrainConfig, host, port, demo_dir, ready_event=None):
    import websockets

    session = SimSession(config, demo_dir)
    session.start()
    clients = []
    broadcaster = asyncio.create_task(_broadcaster(session, clients))
    async with websockets.serve(
            lambda ws: _ws_handler(ws, session, clients), host, port):
        if ready_event is not None:
            ready_event.set()
        try:
            await asyncio.Future()
        finally:
            broadcaster.cancel()
            session.stop()


def serve(config: TrainConfig, host="127.0.0.1", port=8765, demo_dir="demos_ui"):
    print(f"softgrip teleop bridge on ws://{host}:{port} (demos -> {demo_dir})")
    asyncio.run(serve_async(config, host, port, demo_dir))
