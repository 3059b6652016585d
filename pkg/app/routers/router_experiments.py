from fastapi import APIRouter

from app.dependencies import experiments_service
from app.dto.experiment_dto import ConvergenceSummary, ExperimentConfig, RunSummary

experiments_router = APIRouter(prefix="/experiments", tags=["Experiments"])


@experiments_router.post("/run", response_model=RunSummary)
async def run_experiment(config: ExperimentConfig) -> RunSummary:
    """
    Integrate the configured initial datum and return the run summary.
    Configured assertions that fail are reported as an AssertionFailure error.
    """

    return await experiments_service.run(config)


@experiments_router.post("/convergence", response_model=ConvergenceSummary)
async def run_convergence(config: ExperimentConfig) -> ConvergenceSummary:
    """Run the N-ladder of experiment.ladder against experiment.reference_order"""

    return await experiments_service.convergence(config)
