from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session
from app.database import get_db
from app.services import history_manager

router = APIRouter(prefix="/history", tags=["History"])

@router.get("/")
def get_history(skip: int = 0, limit: int = 50, db: Session = Depends(get_db)):
    records = history_manager.get_runs(db, skip, limit)
    return [r.run_to_entry(include_summaries=False) for r in records]


@router.get("/{run_id}")
def get_history_record(run_id: str, db: Session = Depends(get_db)):
    record = history_manager.get_run(db, run_id)
    if not record:
        raise HTTPException(status_code=404, detail="Run record not found")
    return record.run_to_entry(include_summaries=True)
