import logging
import os
import uuid
from typing import Callable, Optional

from sqlalchemy.orm import Session

from app.models.history import RunRecord
from app.services.runner import RunOutput

logger = logging.getLogger(__name__)

def save_run(db: Session, scenario: dict, output: RunOutput, tags=None, parent: Optional[RunRecord] = None):
    record = RunRecord(
        id=str(uuid.uuid4()),
        scenario=scenario,
        summary=output.summary.model_dump(mode="json"),
        out_dir=output.out_dir,
        samples_digest=output.summary.samples_digest,
        events_digest=output.summary.events_digest,
        exit_code=output.exit_code,
        rerun_parent_id=parent.id if parent else None,
        deterministic=None if parent is None else (
            parent.samples_digest == output.summary.samples_digest
            and parent.events_digest == output.summary.events_digest
        ),
        tags=tags or (["rerun"] if parent else ["original"]),
    )
    db.add(record)
    db.commit()
    db.refresh(record)
    return record

def get_runs(db: Session, skip=0, limit=50):
    return (db.query(RunRecord).filter(RunRecord.rerun_parent_id.is_(None))
            .order_by(RunRecord.timestamp).offset(skip).limit(limit).all())

def get_run(db: Session, run_id: str):
    return db.query(RunRecord).filter(RunRecord.id == run_id).first()

def rerun(db: Session, run_id: str, run_fn: Callable[[dict, str], RunOutput], output_root: str):
    """Execute the stored scenario again into a fresh directory and compare artifact digests with the parent."""
    old_record = get_run(db, run_id)
    if not old_record:
        return None

    out_dir = os.path.join(output_root, f"rerun_{uuid.uuid4().hex[:12]}")
    output = run_fn(old_record.scenario, out_dir)
    new_record = save_run(db, old_record.scenario, output, parent=old_record)
    if not new_record.deterministic:
        logger.warning("rerun of %s differs: samples %s vs %s, events %s vs %s", run_id,
                       old_record.samples_digest, new_record.samples_digest,
                       old_record.events_digest, new_record.events_digest)
    return new_record
