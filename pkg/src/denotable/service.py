"""HTTP annotation service wrapping the enumeration pipeline.

A session is created from (table, question, answer); enumeration and
world generation run on a background thread while the session reports
state `searching`.  Once classes exist the client pulls suggested
worlds (greedy one at a time, or the optimal batch), submits answer
annotations, and reads the surviving classes.  Sessions snapshot to
JSON under DATA_DIR after every transition, so a restarted process
serves existing sessions from disk.

States: created -> searching -> awaiting-annotation -> resolved |
exhausted | all-pruned.  Errors use RFC-7807 problem documents.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .answers import target_from_answers
from .chart import chart_stats, first_pass, mark_backward, second_pass
from .classes import EqClass, equivalence_classes, greedy_next_world, prune, select_worlds
from .dataset import RunConfig, atomic_write_text, stream_seed
from .fictitious import generate_worlds
from .forms import parse_form
from .grammar import default_ruleset
from .tables import TableError, make_table
from .world import World, build_world

CONFIG_FIELDS = ("s_max", "beam", "k", "l", "tolerance", "seed", "cap")
TERMINAL_STATES = ("resolved", "exhausted", "all-pruned")


class Problem(Exception):
    """An error to surface as an RFC-7807 problem document."""

    def __init__(self, status: int, title: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.title = title
        self.detail = detail


class Session:
    """One annotation workflow; mutations hold the session lock."""

    def __init__(self, session_id: str, question: str, answer: list[str],
                 columns: list[str], rows: list[list[str]], config: RunConfig,
                 idempotency_key: str | None):
        self.id = session_id
        self.state = "searching"
        self.question = question
        self.answer = answer
        self.columns = columns
        self.rows = rows
        self.config = config
        self.idempotency_key = idempotency_key
        self.lock = threading.RLock()
        self.error: str | None = None
        self.stats: dict | None = None
        self.z_canons: list[str] = []
        self.worlds: list[World] = []
        self.world_ids: list[str] = []
        self.classes: list[EqClass] = []
        self.surviving: list[EqClass] = []
        self.initial_classes = 0
        self.annotations: dict[int, list[str]] = {}
        self.served: set[int] = set()

    def progress(self) -> dict:
        return {
            "state": self.state,
            "initial": self.initial_classes,
            "surviving": len(self.surviving),
            "annotated": len(self.annotations),
            "worlds_total": len(self.worlds),
        }

    def world_payload(self, index: int) -> dict:
        world = self.worlds[index]
        return {
            "index": index,
            "id": self.world_ids[index],
            "columns": list(world.table.display_columns),
            "rows": [list(r) for r in world.table.rows],
        }

    def to_snapshot(self) -> dict:
        return {
            "id": self.id,
            "state": self.state,
            "question": self.question,
            "answer": self.answer,
            "table": {"columns": self.columns, "rows": self.rows},
            "config": self.config.to_json(),
            "idempotency_key": self.idempotency_key,
            "error": self.error,
            "stats": self.stats,
            "z": self.z_canons,
            "worlds": [
                {"id": wid, "rows": [list(r) for r in w.table.rows]}
                for wid, w in zip(self.world_ids, self.worlds)
            ],
            "annotations": {str(i): a for i, a in self.annotations.items()},
            "served": sorted(self.served),
        }


def problem_response(status: int, title: str, detail: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"type": "about:blank", "title": title, "status": status, "detail": detail},
        media_type="application/problem+json",
    )


def _parse_config(data: dict) -> RunConfig:
    unknown = set(data) - set(CONFIG_FIELDS)
    if unknown:
        raise Problem(400, "invalid config", f"unknown config fields: {sorted(unknown)}")
    try:
        return RunConfig().override(**data)
    except ValueError as e:
        raise Problem(400, "invalid config", str(e)) from None


def _parse_table_body(data) -> tuple[list[str], list[list[str]]]:
    if not isinstance(data, dict) or "columns" not in data or "rows" not in data:
        raise Problem(400, "invalid table", "table must carry columns and rows")
    columns = data["columns"]
    rows = data["rows"]
    if not isinstance(columns, list) or not all(isinstance(c, str) for c in columns):
        raise Problem(400, "invalid table", "columns must be a list of strings")
    if not isinstance(rows, list) or not all(
        isinstance(r, list) and all(isinstance(c, str) for c in r) for r in rows
    ):
        raise Problem(400, "invalid table", "rows must be lists of strings")
    try:
        make_table(list(columns), [list(r) for r in rows])
    except TableError as e:
        raise Problem(400, "invalid table", str(e)) from None
    return list(columns), [list(r) for r in rows]


def _search(session: Session, registry: "Registry") -> None:
    """Background enumeration: forms, worlds, classes, first state."""
    try:
        config = session.config
        table = make_table(session.columns, session.rows, table_id=session.id)
        world = build_world(table)
        target = target_from_answers(session.answer)
        chart = first_pass(session.question, world, default_ruleset(), config.s_max)
        mark_backward(chart, target)
        forms, truncated = second_pass(chart, config.cap)
        stats = chart_stats(chart, len(forms), truncated)
        with session.lock:
            session.stats = {
                "pass1_cells": stats.pass1_cells,
                "pass2_cells": stats.pass2_cells,
                "combos_total": stats.combos_total,
                "z_size": stats.z_size,
                "truncated": stats.truncated,
            }
            session.z_canons = [f.canon for f in forms]
        if not forms:
            with session.lock:
                session.state = "exhausted"
                registry.snapshot(session)
            return
        batch = generate_worlds(
            table, session.question, config.k, stream_seed(config.seed, f"worlds:{session.id}")
        )
        classes = equivalence_classes(list(forms), batch.worlds)
        with session.lock:
            session.worlds = list(batch.worlds)
            session.world_ids = [e["world"] for e in batch.manifest["worlds"]]
            session.classes = classes
            session.surviving = list(classes)
            session.initial_classes = len(classes)
            session.state = "resolved" if len(classes) == 1 else "awaiting-annotation"
            registry.snapshot(session)
    except Exception as e:
        with session.lock:
            session.error = f"{type(e).__name__}: {e}"
            registry.snapshot(session)


class Registry:
    """In-memory session store backed by JSON snapshots on disk."""

    def __init__(self, data_dir: Path):
        self.data_dir = data_dir
        self.sessions: dict[str, Session] = {}
        self.by_key: dict[str, str] = {}
        self.lock = threading.Lock()

    def snapshot(self, session: Session) -> None:
        atomic_write_text(
            self.data_dir / f"{session.id}.json",
            json.dumps(session.to_snapshot(), sort_keys=True, indent=2) + "\n",
        )

    def add(self, session: Session) -> None:
        with self.lock:
            self.sessions[session.id] = session
            if session.idempotency_key:
                self.by_key[session.idempotency_key] = session.id

    def find_by_key(self, key: str) -> Session | None:
        with self.lock:
            if key in self.by_key:
                return self.sessions.get(self.by_key[key])
        for path in sorted(self.data_dir.glob("*.json")):
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("idempotency_key") == key:
                return self.get(data["id"])
        return None

    def get(self, session_id: str) -> Session:
        with self.lock:
            if session_id in self.sessions:
                return self.sessions[session_id]
        path = self.data_dir / f"{session_id}.json"
        if not path.exists():
            raise Problem(404, "unknown session", f"no session {session_id!r}")
        session = self._hydrate(json.loads(path.read_text(encoding="utf-8")))
        with self.lock:
            stored = self.sessions.setdefault(session_id, session)
            if session.idempotency_key:
                self.by_key.setdefault(session.idempotency_key, session_id)
        if stored is session and session.state == "searching" and session.error is None:
            # process died mid-search; resume it
            threading.Thread(target=_search, args=(session, self), daemon=True).start()
        return stored

    def _hydrate(self, data: dict) -> Session:
        """Rebuild a session from its snapshot, recomputing derived state."""
        session = Session(
            session_id=data["id"],
            question=data["question"],
            answer=list(data["answer"]),
            columns=list(data["table"]["columns"]),
            rows=[list(r) for r in data["table"]["rows"]],
            config=RunConfig.from_json(data["config"]),
            idempotency_key=data.get("idempotency_key"),
        )
        session.state = data["state"]
        session.error = data.get("error")
        session.stats = data.get("stats")
        session.z_canons = list(data.get("z", []))
        session.annotations = {int(i): list(a) for i, a in data.get("annotations", {}).items()}
        session.served = set(data.get("served", []))
        if data.get("worlds"):
            session.world_ids = [w["id"] for w in data["worlds"]]
            session.worlds = [
                build_world(
                    make_table(session.columns, [list(r) for r in w["rows"]], table_id=w["id"])
                )
                for w in data["worlds"]
            ]
        if session.z_canons and session.worlds:
            forms = [parse_form(c) for c in session.z_canons]
            session.classes = equivalence_classes(forms, session.worlds)
            session.initial_classes = len(session.classes)
            targets = {
                i: target_from_answers(a) for i, a in session.annotations.items()
            }
            session.surviving, _ = prune(
                session.classes, targets, session.config.tolerance
            )
        return session


def create_app(data_dir=None, ui_dir=None) -> FastAPI:
    """The service app; `data_dir` falls back to $DATA_DIR then ./sessions."""
    root = Path(data_dir or os.environ.get("DATA_DIR", "sessions"))
    root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="denotable annotation service")
    registry = Registry(root)
    app.state.registry = registry

    @app.exception_handler(Problem)
    async def on_problem(request: Request, exc: Problem):
        return problem_response(exc.status, exc.title, exc.detail)

    @app.exception_handler(RequestValidationError)
    async def on_validation(request: Request, exc: RequestValidationError):
        return problem_response(400, "invalid request", str(exc))

    async def read_json(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise Problem(400, "invalid request", "body must be a JSON object") from None
        if not isinstance(body, dict):
            raise Problem(400, "invalid request", "body must be a JSON object")
        return body

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await read_json(request)
        key = request.headers.get("Idempotency-Key")
        if key:
            existing = registry.find_by_key(key)
            if existing is not None:
                return JSONResponse(
                    status_code=200, content={"id": existing.id, "state": existing.state}
                )
        question = body.get("question")
        answer = body.get("answer")
        if not isinstance(question, str) or not question:
            raise Problem(400, "invalid question", "question must be a non-empty string")
        if (
            not isinstance(answer, list)
            or not answer
            or not all(isinstance(a, str) and a.strip() for a in answer)
        ):
            raise Problem(400, "invalid answer", "answer must be non-empty strings")
        columns, rows = _parse_table_body(body.get("table"))
        config = _parse_config(body.get("config", {}))
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            question=question,
            answer=list(answer),
            columns=columns,
            rows=rows,
            config=config,
            idempotency_key=key,
        )
        registry.add(session)
        registry.snapshot(session)
        threading.Thread(target=_search, args=(session, registry), daemon=True).start()
        return {"id": session.id, "state": session.state}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            view = {
                "id": session.id,
                "question": session.question,
                "answer": session.answer,
                "config": session.config.to_json(),
                "stats": session.stats,
                "z_size": len(session.z_canons),
                "annotations": {str(i): a for i, a in sorted(session.annotations.items())},
                "error": session.error,
                **session.progress(),
            }
        return view

    def _require_post_search(session: Session) -> None:
        if session.state == "searching":
            raise Problem(409, "search in progress", "session is still searching")

    @app.get("/sessions/{session_id}/next-world")
    async def next_world(session_id: str, mode: str = "greedy"):
        if mode not in ("greedy", "batch"):
            raise Problem(400, "invalid mode", "mode must be greedy or batch")
        session = registry.get(session_id)
        with session.lock:
            _require_post_search(session)
            if session.state in TERMINAL_STATES:
                return {"done": True, **session.progress()}
            if mode == "batch":
                l = min(session.config.l, len(session.worlds))
                selection = select_worlds(session.surviving, l)
                session.served.update(selection.worlds)
                registry.snapshot(session)
                return {
                    "worlds": [session.world_payload(w) for w in selection.worlds],
                    "objective": selection.objective,
                    "question": session.question,
                    **session.progress(),
                }
            candidates = [
                i for i in range(len(session.worlds)) if i not in session.annotations
            ]
            choice = greedy_next_world(session.surviving, candidates)
            if choice is None:
                session.state = "exhausted"
                registry.snapshot(session)
                return {"done": True, **session.progress()}
            session.served.add(choice)
            registry.snapshot(session)
            return {
                "world": session.world_payload(choice),
                "question": session.question,
                **session.progress(),
            }

    @app.post("/sessions/{session_id}/annotations")
    async def submit_annotation(session_id: str, request: Request):
        body = await read_json(request)
        session = registry.get(session_id)
        with session.lock:
            _require_post_search(session)
            world_ref = body.get("world")
            if isinstance(world_ref, str) and world_ref in session.world_ids:
                index = session.world_ids.index(world_ref)
            elif isinstance(world_ref, int):
                index = world_ref
            else:
                raise Problem(409, "world not served", f"unknown world {world_ref!r}")
            if index not in session.served:
                raise Problem(
                    409, "world not served", f"world {index} was never suggested"
                )
            answer = body.get("answer")
            if not isinstance(answer, list) or not all(
                isinstance(a, str) and a.strip() for a in answer
            ):
                raise Problem(
                    422, "unparseable answer", "answer must be non-empty strings"
                )
            try:
                target_from_answers(answer)
            except ValueError as e:
                raise Problem(422, "unparseable answer", str(e)) from None
            session.annotations[index] = list(answer)
            targets = {
                i: target_from_answers(a) for i, a in session.annotations.items()
            }
            session.surviving, _ = prune(
                session.classes, targets, session.config.tolerance
            )
            if not session.surviving:
                session.state = "all-pruned"
            elif len(session.surviving) == 1:
                session.state = "resolved"
            else:
                session.state = "awaiting-annotation"
            registry.snapshot(session)
            return session.progress()

    @app.get("/sessions/{session_id}/result")
    async def get_result(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            _require_post_search(session)
            classes = sorted(
                session.surviving,
                key=lambda c: (-len(c.members), c.representative.canon),
            )
            return {
                "state": session.state,
                "all_pruned": session.state == "all-pruned",
                "classes": [
                    {"representative": c.representative.canon, "members": len(c.members)}
                    for c in classes
                ],
            }

    @app.get("/sessions/{session_id}/classes")
    async def get_classes(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            _require_post_search(session)
            return {
                "initial": session.initial_classes,
                "surviving": [
                    {
                        "representative": c.representative.canon,
                        "members": [f.canon for f in c.members],
                    }
                    for c in session.surviving
                ],
            }

    ui = Path(ui_dir) if ui_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui), html=True), name="ui")

    return app
