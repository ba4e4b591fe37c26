"""HTTP API for the manual annotation pass over gold candidate instances.

Decisions land in an append-only JSON-lines log that is fsynced per write and
replayed on startup, so an acknowledged decision survives a crash.  The
browser UI is optional: it is served from /ui/ when its static assets exist,
and every endpoint works without them.
"""

from __future__ import annotations

import datetime
import json
import os
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dataset import NATIVE_COLUMNS, instance_to_row, read_instances
from .matcher import LABEL_ORDER, LabelledInstance, strip_markers
from .metrics import cohen_kappa
from .records import RecordStore

PROCESSING_ERROR = "PROCESSING_ERROR"
LABEL_VALUES = tuple(l.value for l in LABEL_ORDER)
VALID_DECISIONS = LABEL_VALUES + (PROCESSING_ERROR,)


@dataclass(frozen=True)
class AnnotationRecord:
    instance_id: str
    annotator: str
    decision: str  # one of the ten labels or PROCESSING_ERROR
    timestamp: str
    version: int


class AnnotationLog:
    """Append-only decision log with last-write-wins per (instance, annotator)."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[tuple[str, str], AnnotationRecord] = {}
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            record = AnnotationRecord(**doc)
            self._records[(record.instance_id, record.annotator)] = record

    def record(self, instance_id: str, annotator: str, decision: str) -> AnnotationRecord:
        if decision not in VALID_DECISIONS:
            raise ValueError(f"decision {decision!r} is not a label or {PROCESSING_ERROR}")
        with self._lock:
            key = (instance_id, annotator)
            previous = self._records.get(key)
            entry = AnnotationRecord(
                instance_id=instance_id,
                annotator=annotator,
                decision=decision,
                timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(
                    timespec="seconds"
                ),
                version=(previous.version + 1) if previous else 1,
            )
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(entry), ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._records[key] = entry
            return entry

    def decisions(self) -> dict[tuple[str, str], AnnotationRecord]:
        return dict(self._records)

    def annotators(self) -> list[str]:
        return sorted({annotator for _, annotator in self._records})

    def for_instance(self, instance_id: str) -> dict[str, AnnotationRecord]:
        return {
            annotator: record
            for (iid, annotator), record in self._records.items()
            if iid == instance_id
        }

    def compact(self) -> None:
        """Rewrite the log keeping only the latest decision per key."""
        with self._lock:
            lines = [
                json.dumps(asdict(r), ensure_ascii=False)
                for r in sorted(self._records.values(), key=lambda r: (r.instance_id, r.annotator))
            ]
            tmp = self.path.with_suffix(".tmp")
            tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
            tmp.replace(self.path)


def export_gold(
    instances: list[LabelledInstance],
    log: AnnotationLog,
) -> tuple[list[tuple[LabelledInstance, str]], list[dict]]:
    """Adjudicated gold rows plus a withheld report.

    An instance is exported once at least two annotators agree on a label;
    a PROCESSING_ERROR flag from any annotator removes it outright, and
    unresolved disagreements are withheld for adjudication."""
    gold: list[tuple[LabelledInstance, str]] = []
    withheld: list[dict] = []
    for instance in instances:
        decisions = log.for_instance(instance.instance_id)
        if not decisions or len(decisions) < 2:
            withheld.append(
                {"instance_id": instance.instance_id, "reason": "not doubly annotated",
                 "decisions": {a: r.decision for a, r in decisions.items()}}
            )
            continue
        values = {r.decision for r in decisions.values()}
        if PROCESSING_ERROR in values:
            withheld.append(
                {"instance_id": instance.instance_id, "reason": "processing error",
                 "decisions": {a: r.decision for a, r in decisions.items()}}
            )
            continue
        if len(values) > 1:
            withheld.append(
                {"instance_id": instance.instance_id, "reason": "disagreement",
                 "decisions": {a: r.decision for a, r in decisions.items()}}
            )
            continue
        gold.append((instance, values.pop()))
    return gold, withheld


def render_gold_file(gold: list[tuple[LabelledInstance, str]]) -> str:
    header = "\t".join(NATIVE_COLUMNS + ("gold_label",))
    lines = [header]
    for instance, label in gold:
        lines.append("\t".join(instance_to_row(instance) + [label]))
    return "\n".join(lines) + "\n"


class LabelPost(BaseModel):
    instance_id: str
    annotator: str
    decision: str


def create_app(
    dataset_path,
    log_path,
    store_path=None,
    ui_dir=None,
) -> FastAPI:
    """Annotation service over one gold-candidate dataset file."""
    instances = read_instances(dataset_path)
    order = {inst.instance_id: i for i, inst in enumerate(instances)}
    by_id = {inst.instance_id: inst for inst in instances}
    log = AnnotationLog(log_path)
    store = RecordStore.load(store_path) if store_path else None

    app = FastAPI(title="bioforge annotation API", version="1")

    def instance_payload(instance: LabelledInstance) -> dict:
        text, e1, e2 = strip_markers(instance.marked_text)
        record = store.lookup(instance.article.wiki_id) if store else None
        return {
            "instance_id": instance.instance_id,
            "text": text,
            "marked_text": instance.marked_text,
            "e1": {"start": e1[0], "end": e1[1], "surface": instance.e1_surface},
            "e2": {"start": e2[0], "end": e2[1], "surface": instance.e2_surface},
            "auto_label": instance.label.value,
            "person_slot": instance.person_slot,
            "strategy": instance.strategy,
            "article": {
                "wiki_id": instance.article.wiki_id,
                "title": instance.article.title,
                "person": record.full_name if record else instance.article.title,
            },
            "labels": list(LABEL_VALUES),
            "error_flag": PROCESSING_ERROR,
        }

    @app.get("/api/queue/next")
    def queue_next(annotator: str):
        if not annotator:
            raise HTTPException(status_code=422, detail="annotator is required")
        done = {iid for (iid, a) in log.decisions() if a == annotator}
        remaining = [inst for inst in instances if inst.instance_id not in done]
        payload = {
            "total": len(instances),
            "done": len(done),
            "remaining": len(remaining),
        }
        if remaining:
            payload["instance"] = instance_payload(remaining[0])
        return payload

    @app.post("/api/labels")
    def post_label(body: LabelPost):
        if body.instance_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown instance {body.instance_id}")
        if body.decision not in VALID_DECISIONS:
            raise HTTPException(
                status_code=422,
                detail=f"decision must be one of {', '.join(VALID_DECISIONS)}",
            )
        if not body.annotator.strip():
            raise HTTPException(status_code=422, detail="annotator is required")
        entry = log.record(body.instance_id, body.annotator.strip(), body.decision)
        return asdict(entry)

    @app.get("/api/progress")
    def progress():
        decisions = log.decisions()
        per_annotator: dict[str, int] = {}
        for (_, annotator) in decisions:
            per_annotator[annotator] = per_annotator.get(annotator, 0) + 1
        doubly = sum(
            1 for inst in instances if len(log.for_instance(inst.instance_id)) >= 2
        )
        return {
            "total": len(instances),
            "per_annotator": per_annotator,
            "doubly_annotated": doubly,
        }

    @app.get("/api/kappa")
    def kappa():
        annotators = log.annotators()
        if len(annotators) < 2:
            return {"kappa": None, "n": 0, "annotators": annotators}
        first, second = annotators[0], annotators[1]
        a, b = [], []
        for inst in sorted(by_id.values(), key=lambda i: order[i.instance_id]):
            decisions = log.for_instance(inst.instance_id)
            if first in decisions and second in decisions:
                a.append(decisions[first].decision)
                b.append(decisions[second].decision)
        if not a:
            return {"kappa": None, "n": 0, "annotators": [first, second]}
        report = cohen_kappa(a, b)
        return {
            "kappa": report.kappa,
            "observed_agreement": report.observed_agreement,
            "expected_agreement": report.expected_agreement,
            "n": report.n,
            "annotators": [first, second],
        }

    @app.get("/api/export")
    def export(mode: str = "gold"):
        gold, withheld = export_gold(instances, log)
        if mode == "gold":
            return PlainTextResponse(
                render_gold_file(gold), media_type="text/tab-separated-values"
            )
        if mode == "disagreements":
            return [w for w in withheld if w["reason"] == "disagreement"]
        if mode == "withheld":
            return withheld
        raise HTTPException(status_code=422, detail="mode must be gold, disagreements or withheld")

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse(url="/ui/")

    return app


def serve_annotation(
    dataset_path,
    log_path,
    store_path=None,
    ui_dir=None,
    host: str = "127.0.0.1",
    port: int = 8470,
) -> None:
    import uvicorn

    app = create_app(dataset_path, log_path, store_path=store_path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
