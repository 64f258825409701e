from sqlalchemy import Boolean, Column, DateTime, Integer, JSON, String, ForeignKey
from sqlalchemy.orm import relationship
import uuid
from datetime import datetime
from app.database import Base

class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(String(36), primary_key=True, default=lambda: str(uuid.uuid4()))
    timestamp = Column(DateTime, default=datetime.utcnow, nullable=False)

    scenario = Column(JSON, nullable=False)
    summary = Column(JSON, nullable=False)
    out_dir = Column(String, nullable=True)

    samples_digest = Column(String(16), nullable=True)
    events_digest = Column(String(16), nullable=True)
    exit_code = Column(Integer, nullable=False, default=0)
    deterministic = Column(Boolean, nullable=True)  # reruns only: digests equal to the parent's

    rerun_parent_id = Column(String(36), ForeignKey("runs.id"), nullable=True)
    reruns = relationship("RunRecord")

    tags = Column(JSON, default=[])

def _summary_card(summary):
    """Short summary for version cards."""
    if not summary or not isinstance(summary, dict):
        return {}
    keys = ("reason", "exit_code", "final_topology", "t_final", "steps")
    card = {k: summary.get(k) for k in keys}
    card["transitions"] = [f"{t.get('pre')}->{t.get('post')}" for t in summary.get("transitions", [])]
    return card

def run_to_version(self, include_summary: bool = False):
    return {
        "version_id": self.id,
        "timestamp": self.timestamp,
        "is_rerun": bool(self.rerun_parent_id),
        "exit_code": self.exit_code,
        "samples_digest": self.samples_digest,
        "events_digest": self.events_digest,
        "deterministic": self.deterministic,
        "summary": _summary_card(self.summary),
        **({"result": self.summary} if include_summary else {})
    }

def run_to_entry(self, include_summaries: bool = False):
    versions = [self.run_to_version(include_summary=include_summaries)]
    versions += [r.run_to_version(include_summary=include_summaries) for r in sorted(self.reruns, key=lambda x: x.timestamp)]
    return {
        "id": self.id,
        "name": (self.scenario or {}).get("name"),
        "scenario": self.scenario,
        "versions": versions,
    }

# Attach helpers
RunRecord.run_to_version = run_to_version
RunRecord.run_to_entry = run_to_entry
