"""
FastAPI application for the memory-kernel stability toolkit.
Provides REST API endpoints for classification, spectra and region lookups.
"""
import logging
import os
import sys
import time
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis import dispersion, stability
from analysis.errors import MemstabError
from analysis.kernel_model import KernelSpec
from analysis.settings import configure_logging, get_settings

configure_logging()
logger = logging.getLogger(__name__)

API_VERSION = "1.0.0"

app = FastAPI(title="Memory Kernel Stability API", version=API_VERSION)


# ============================================================================
# Request models
# ============================================================================

class SpecBody(BaseModel):
    k: Optional[int] = None
    theta: List[float]
    tau: float = 1.0


class SpectrumBody(BaseModel):
    spec: SpecBody
    xi_min: float = 0.0
    xi_max: float = 100.0
    n_points: int = Field(200, ge=2, le=20000)
    log_spacing: bool = True


def _to_spec(body: SpecBody) -> KernelSpec:
    """Validate a request body; invalid specs become 422 responses."""
    payload = {"theta": body.theta, "tau": body.tau}
    if body.k is not None:
        payload["k"] = body.k
    try:
        return KernelSpec.from_dict(payload)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))


# ============================================================================
# Endpoints
# ============================================================================

@app.get("/")
async def root():
    """
    Root endpoint - Simple service status and documentation link.
    """
    return {
        "service": "Memory Kernel Stability API",
        "status": "running",
        "docs": "/docs"
    }


@app.get("/health")
async def health_check():
    """
    Health check endpoint.
    Returns API status, version and the active numeric configuration.
    """
    try:
        settings = get_settings()
    except ValueError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        raise HTTPException(status_code=503, detail="invalid configuration")
    return {
        "status": "healthy",
        "api": "running",
        "version": API_VERSION,
        "timestamp": time.time(),
        "settings": {
            "root_tol": settings.root_tol,
            "xi_min": settings.xi_min,
            "xi_max": settings.xi_max,
            "xi_points": settings.xi_points,
        },
    }


@app.get("/health/live")
async def liveness_probe():
    """
    Liveness probe endpoint.
    Returns 200 if the application is running.
    """
    return {"status": "alive"}


@app.post("/classify")
def classify(body: SpecBody):
    """
    Classify a kernel spec.

    Returns the verdict JSON: class, c0 (stable), crossings and unstable
    window (intermediate instability) and the decision trace.
    """
    spec = _to_spec(body)
    try:
        verdict = stability.classify(spec)
    except MemstabError as e:
        logger.error(f"Classification failed for theta={spec.theta}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error classifying spec: {str(e)}")
    payload = verdict.to_dict()
    payload["spec"] = spec.to_dict()
    return payload


@app.post("/spectrum")
def spectrum(body: SpectrumBody):
    """
    Envelope max Re lambda(xi) on the requested grid.
    """
    spec = _to_spec(body.spec)
    try:
        result = dispersion.spectrum(spec, body.xi_min, body.xi_max, body.n_points, body.log_spacing)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except MemstabError as e:
        logger.error(f"Spectrum failed for theta={spec.theta}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error computing spectrum: {str(e)}")
    return {
        "spec": spec.to_dict(),
        "rows": result.envelope_frame().to_dict(orient="records"),
    }


@app.get("/regions/{eta2}/{eta3}")
async def regions(eta2: float, eta3: float):
    """
    Membership of (eta2, eta3) in the k=2 regions S, M and C.
    """
    try:
        membership = stability.region_membership_k2(eta2, eta3)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return {
        "eta2": eta2,
        "eta3": eta3,
        "in_S": membership.in_S,
        "in_M": membership.in_M,
        "in_C": membership.in_C,
        "verdict": stability.verdict_k2(eta2, eta3),
    }


if __name__ == "__main__":
    import uvicorn

    # Get port from environment variable, default to 8000
    port = int(os.getenv("PORT", "8000"))
    host = os.getenv("API_HOST", "0.0.0.0")

    uvicorn.run(app, host=host, port=port)
