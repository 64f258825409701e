import os
import uuid
from typing import Any, Dict

from fastapi import APIRouter, Body, Depends, HTTPException
from sqlalchemy.orm import Session

from app.database import get_db
from app.services import history_manager
from app.services.runner import EXIT_UNSUPPORTED, RunOutput, run, scenario_from_dict
from utils.config import load_config
from utils.errors import ScenarioError

router = APIRouter(prefix="/runs", tags=["Runs"])


def _output_root() -> str:
    root = load_config()["OUTPUT_DIR"]
    os.makedirs(root, exist_ok=True)
    return root


def _run_stored(scenario: Dict[str, Any], out_dir: str) -> RunOutput:
    return run(scenario_from_dict(scenario), out_dir)


def _response(record) -> Dict[str, Any]:
    entry = record.run_to_entry(include_summaries=True)
    entry["run_id"] = record.id
    return entry


@router.post("/")
def submit_run(scenario: Dict[str, Any] = Body(...), db: Session = Depends(get_db)):
    try:
        parsed = scenario_from_dict(scenario)
    except ScenarioError as e:
        raise HTTPException(status_code=400, detail={"error": str(e), "field": e.field})

    out_dir = os.path.join(_output_root(), f"{parsed.name}_{uuid.uuid4().hex[:12]}")
    output = run(parsed, out_dir)
    record = history_manager.save_run(db, scenario, output)
    if output.exit_code == EXIT_UNSUPPORTED:
        raise HTTPException(status_code=422, detail={
            "error": output.summary.message or output.summary.reason,
            "run_id": record.id,
        })
    return _response(record)


@router.get("/")
def list_runs(skip: int = 0, limit: int = 50, db: Session = Depends(get_db)):
    return [r.run_to_entry(include_summaries=False) for r in history_manager.get_runs(db, skip, limit)]


@router.get("/{run_id}")
def get_run(run_id: str, db: Session = Depends(get_db)):
    record = history_manager.get_run(db, run_id)
    if not record:
        raise HTTPException(status_code=404, detail="Run not found")
    return _response(record)


@router.post("/{run_id}/rerun")
def rerun(run_id: str, db: Session = Depends(get_db)):
    record = history_manager.rerun(db, run_id, _run_stored, _output_root())
    if not record:
        raise HTTPException(status_code=404, detail="Run not found")
    return {"run_id": record.id, "parent_id": run_id, "deterministic": record.deterministic,
            "samples_digest": record.samples_digest, "events_digest": record.events_digest}
