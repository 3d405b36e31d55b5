import sys
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from czreach.errors import CzreachError  # noqa: E402
from czreach.scenario import ScenarioModel, compute_reach, scenario_from_dict  # noqa: E402
from czreach.verify import check_avoid  # noqa: E402

app = FastAPI(title="czreach - Reachability APIs")

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class ReachRequest(BaseModel):
    scenario: ScenarioModel
    method: Optional[str] = None
    max_members: Optional[int] = None


def _run(data: ReachRequest):
    """Build the scenario (network paths must stay inside the bundled scenarios/ folder) and reach."""
    scenario = scenario_from_dict(data.scenario.dict(), path="<request>", base_dir=SCENARIO_DIR, confine=True)
    result = compute_reach(scenario, method=data.method, max_members=data.max_members)
    return scenario, result


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/reach")
def reach(data: ReachRequest):
    """Compute reachable sets for a scenario and return them as result JSON."""
    start = time.perf_counter()
    try:
        _, result = _run(data)
    except CzreachError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Reachability failed: {str(e)}")
    return {
        "result": result.to_dict(),
        "wall_ms": (time.perf_counter() - start) * 1000.0,
    }


@app.post("/verify")
def verify(data: ReachRequest):
    """Compute reachable sets and check them against the scenario's unsafe sets.

    The verdict is "Safe", "Unsafe-Intersection-Found" (exact method only) or "Unknown".
    """
    try:
        scenario, result = _run(data)
        report = check_avoid(result, scenario.unsafe_sets)
    except CzreachError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Verification failed: {str(e)}")
    return {"result": result.to_dict(), "report": report.to_dict()}


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=8000)
