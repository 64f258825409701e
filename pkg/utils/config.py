# utils/config.py
import os
from dotenv import load_dotenv

load_dotenv()


def load_config():
    """
    Minimal config loader: reads env vars (and .env) as needed.
    Numerical run settings never come from here; they live in scenario files.
    """
    return {
        "OUTPUT_DIR": os.getenv("OUTPUT_DIR", "runs"),
        "DATABASE_URL": os.getenv("DATABASE_URL", "sqlite:///./flow_history.db"),
        "LOG_LEVEL": os.getenv("LOG_LEVEL", "INFO").upper(),
        "ATLAS_R_TRUNC": float(os.getenv("ATLAS_R_TRUNC", "8.0")),
        "ATLAS_CACHE": os.getenv("ATLAS_CACHE", "1") not in ("0", "false", "False", ""),
        "APP_NAME": os.getenv("APP_NAME", "Network Curvature Flow Lab"),
        "APP_VERSION": os.getenv("APP_VERSION", "1.0.0"),
        "APP_HOST": os.getenv("APP_HOST", "0.0.0.0"),
        "APP_PORT": int(os.getenv("APP_PORT", "8000")),
    }
