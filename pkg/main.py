import logging

from dotenv import load_dotenv

load_dotenv()

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.database import Base, engine
from app.routers import history, runs
from app.services.runner import atlas_summary
from utils.config import load_config
from utils.log import configure_logging

config = load_config()
configure_logging(config["LOG_LEVEL"])
logger = logging.getLogger(__name__)

# ------------------- FastAPI setup -------------------
app = FastAPI(
    title=config["APP_NAME"],
    version=config["APP_VERSION"],
    description="Curvature flow of planar networks with at most two triple junctions."
)

# Create tables if not exist
Base.metadata.create_all(bind=engine)

# Routers
app.include_router(history.router)
app.include_router(runs.router)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/")
def health():
    return {"status": "ok", "app": config["APP_NAME"], "version": config["APP_VERSION"]}


@app.get("/atlas")
def atlas():
    rows = atlas_summary()
    logger.info("atlas: %d profiles, %d certified", len(rows), sum(r["certified"] for r in rows))
    return {"profiles": rows}


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("main:app", host=config["APP_HOST"], port=config["APP_PORT"], log_level=config["LOG_LEVEL"].lower())
