"""HTTP service backing the human tidying study.

Serves scene JSON, records keyboard edit sessions (1 cm moves, 10 degree
rotations, explicit selection), and persists every session append-only as
newline-delimited JSON so a restart replays the store and loses at most the
in-flight event.  Totals always come from ``recount_session`` over the
recorded events; the service never keeps a separate counter that could
drift.
"""

from __future__ import annotations

import json
import math
import os
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .datagen import generate_trajectory, split_templates
from .evaluation import EVENT_OPS, MOVE_STEP_M, ROTATE_STEP_DEG, recount_session
from .templates import load_library
from .world import Scene, normalize_angle, scene_from_dict, scene_to_dict

# screen-up is +y in table coordinates; clockwise is negative rotation
MOVE_DELTAS = {
    "move-up": (0.0, MOVE_STEP_M),
    "move-down": (0.0, -MOVE_STEP_M),
    "move-left": (-MOVE_STEP_M, 0.0),
    "move-right": (MOVE_STEP_M, 0.0),
}
ROTATE_DELTAS = {"rotate-ccw": ROTATE_STEP_DEG, "rotate-cw": -ROTATE_STEP_DEG}


@dataclass
class EditEvent:
    op: str
    object_id: int
    timestamp: float


@dataclass
class EditSession:
    session_id: str
    scene_id: str
    participant: str
    initial: Scene
    scene: Scene
    selected: int | None = None
    events: list[EditEvent] = field(default_factory=list)
    tlx: dict | None = None

    @property
    def finished(self) -> bool:
        return self.tlx is not None

    def totals(self) -> dict:
        return recount_session(self)


def apply_event(session: EditSession, event: EditEvent) -> None:
    """Validates and applies one edit in place; raises ValueError on reject."""
    if event.op not in EVENT_OPS:
        raise ValueError(f"unknown op {event.op!r}")
    ids = {o.id for o in session.scene.objects}
    if event.object_id not in ids:
        raise ValueError(f"unknown object {event.object_id}")
    if event.op == "select":
        session.selected = event.object_id
        session.events.append(event)
        return
    if session.selected != event.object_id:
        raise ValueError(f"object {event.object_id} is not selected")
    obj = session.scene.object_by_id(event.object_id)
    x, y, theta = obj.pose
    if event.op in MOVE_DELTAS:
        dx, dy = MOVE_DELTAS[event.op]
        pose = (x + dx, y + dy, theta)
    else:
        pose = (x, y, normalize_angle(theta + ROTATE_DELTAS[event.op]))
    if not all(math.isfinite(v) for v in pose):
        raise ValueError("resulting pose is not finite")
    new_objects = tuple(replace(o, pose=pose) if o.id == event.object_id else o for o in session.scene.objects)
    session.scene = replace(session.scene, objects=new_objects)
    session.events.append(event)


def default_scene_set(per_env: int = 2, seed: int = 7) -> dict[str, Scene]:
    """Messy held-out scenes to tidy, a few per environment."""
    library = load_library()
    assignment = split_templates(library, seed=0)
    held = [t for t in library if assignment[t.id] == "validation"]
    scenes: dict[str, Scene] = {}
    by_env: dict[str, list] = {}
    for t in sorted(held, key=lambda t: t.id):
        by_env.setdefault(t.environment_tag, []).append(t)
    for env, templates in sorted(by_env.items()):
        for k in range(min(per_env, len(templates))):
            traj = generate_trajectory(templates[k], T=5, rng_seed=seed + k)
            scenes[f"{env}-{k}"] = traj.steps[0][0]
    return scenes


def load_scene_dir(path: str | Path) -> dict[str, Scene]:
    scenes = {}
    for f in sorted(Path(path).glob("*.json")):
        scenes[f.stem] = scene_from_dict(json.loads(f.read_text()))
    if not scenes:
        raise ValueError(f"no scene files in {path}")
    return scenes


class SessionStore:
    """In-memory sessions backed by an append-only event log on disk."""

    def __init__(self, scenes: dict[str, Scene], store_path: str | Path):
        self.scenes = scenes
        self.path = Path(store_path)
        self.sessions: dict[str, EditSession] = {}
        if self.path.exists():
            self._replay()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a")

    def _append(self, record: dict) -> None:
        self._fh.write(json.dumps(record) + "\n")
        self._fh.flush()

    def _replay(self) -> None:
        # a torn final line (crash mid-write) is dropped, losing only that event
        for line in self.path.read_text().splitlines():
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue
            kind = rec.get("kind")
            if kind == "session":
                initial = scene_from_dict(rec["initial_scene"])
                self.sessions[rec["session_id"]] = EditSession(
                    session_id=rec["session_id"],
                    scene_id=rec["scene_id"],
                    participant=rec["participant"],
                    initial=initial,
                    scene=initial,
                )
            elif kind == "event" and rec["session_id"] in self.sessions:
                apply_event(
                    self.sessions[rec["session_id"]],
                    EditEvent(op=rec["op"], object_id=rec["object_id"], timestamp=rec["timestamp"]),
                )
            elif kind == "finish" and rec["session_id"] in self.sessions:
                self.sessions[rec["session_id"]].tlx = rec["tlx"]

    def create(self, scene_id: str, participant: str) -> EditSession:
        if scene_id not in self.scenes:
            raise KeyError(scene_id)
        session = EditSession(
            session_id=uuid.uuid4().hex,
            scene_id=scene_id,
            participant=participant,
            initial=self.scenes[scene_id],
            scene=self.scenes[scene_id],
        )
        self.sessions[session.session_id] = session
        self._append(
            {
                "kind": "session",
                "session_id": session.session_id,
                "scene_id": scene_id,
                "participant": participant,
                "initial_scene": scene_to_dict(session.initial),
                "created_at": time.time(),
            }
        )
        return session

    def get(self, session_id: str) -> EditSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def record_event(self, session: EditSession, event: EditEvent) -> None:
        apply_event(session, event)  # raises before anything is persisted
        self._append(
            {
                "kind": "event",
                "session_id": session.session_id,
                "op": event.op,
                "object_id": event.object_id,
                "timestamp": event.timestamp,
            }
        )

    def finish(self, session: EditSession, tlx: dict) -> None:
        session.tlx = tlx
        self._append(
            {
                "kind": "finish",
                "session_id": session.session_id,
                "tlx": tlx,
                "final_scene": scene_to_dict(session.scene),
                "finished_at": time.time(),
            }
        )


class CreateSessionBody(BaseModel):
    scene_id: str
    participant: str = "anonymous"


class EventBody(BaseModel):
    op: str
    object_id: int
    timestamp: float | None = None


class FinishBody(BaseModel):
    mental_demand: int = Field(ge=0, le=20)
    performance: int = Field(ge=0, le=20)
    frustration: int = Field(ge=0, le=20)


def _session_payload(session: EditSession) -> dict:
    return {
        "session_id": session.session_id,
        "scene_id": session.scene_id,
        "scene": scene_to_dict(session.scene),
        "selected_object": session.selected,
        "totals": session.totals(),
        "finished": session.finished,
    }


def create_app(scenes: dict[str, Scene] | None = None, store_path: str | Path | None = None) -> FastAPI:
    if scenes is None:
        scenes = default_scene_set()
    if store_path is None:
        store_path = os.environ.get("TIDYPLAN_STORE", "sessions.ndjson")
    store = SessionStore(scenes, store_path)
    app = FastAPI(title="tidyplan session service")
    app.state.store = store

    def _get(session_id: str) -> EditSession:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.get("/api/scenes")
    def list_scenes():
        return {
            "scenes": [
                {"id": sid, "environment": s.environment_tag, "scene": scene_to_dict(s)}
                for sid, s in sorted(store.scenes.items())
            ]
        }

    @app.get("/api/scene/{scene_id}")
    def get_scene(scene_id: str):
        scene = store.scenes.get(scene_id)
        if scene is None:
            raise HTTPException(status_code=404, detail=f"unknown scene {scene_id}")
        return {"id": scene_id, "scene": scene_to_dict(scene)}

    @app.post("/api/session")
    def create_session(body: CreateSessionBody):
        try:
            session = store.create(body.scene_id, body.participant)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown scene {body.scene_id}")
        return _session_payload(session)

    @app.post("/api/session/{session_id}/event")
    def post_event(session_id: str, body: EventBody):
        session = _get(session_id)
        if session.finished:
            raise HTTPException(status_code=409, detail="session already finished")
        event = EditEvent(
            op=body.op,
            object_id=body.object_id,
            timestamp=body.timestamp if body.timestamp is not None else time.time(),
        )
        try:
            store.record_event(session, event)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        return _session_payload(session)

    @app.post("/api/session/{session_id}/finish")
    def finish_session(session_id: str, body: FinishBody):
        session = _get(session_id)
        if session.finished:
            raise HTTPException(status_code=409, detail="session already finished")
        store.finish(session, body.model_dump())
        return {
            "session_id": session.session_id,
            "totals": session.totals(),
            "tlx": session.tlx,
            "final_scene": scene_to_dict(session.scene),
        }

    @app.get("/api/session/{session_id}/metrics")
    def session_metrics(session_id: str):
        session = _get(session_id)
        return {
            "session_id": session.session_id,
            "scene_id": session.scene_id,
            "participant": session.participant,
            "totals": session.totals(),
            "tlx": session.tlx,
            "finished": session.finished,
        }

    ui_dir = os.environ.get("TIDYPLAN_UI", str(Path(__file__).resolve().parents[2] / "frontend" / "dist"))
    if Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def run_server(port: int = 8000) -> None:
    import uvicorn

    scenes = None
    scene_dir = os.environ.get("TIDYPLAN_SCENES")
    if scene_dir:
        scenes = load_scene_dir(scene_dir)
    uvicorn.run(create_app(scenes), host="127.0.0.1", port=port)
