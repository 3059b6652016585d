from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, RedirectResponse

from app.common.exceptions.exception_handler import ExceptionHandlerMiddleware
from app.routers.router_experiments import experiments_router
from app.routers.router_kernel import kernel_router

from .dependencies import settings

app = FastAPI(
    title="EPSpectral API",
    description="API for the equilibrium preserving spectral Boltzmann solver: kernel tables, runs and convergence ladders.",
    version="1.0.0",
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)
app.add_middleware(ExceptionHandlerMiddleware)


# Root endpoint
@app.get("/", response_model=dict[str, str])
def read_root():
    return RedirectResponse(url="/docs")


@app.get("/logs")
async def get_logs():
    """
    Get logs file from app
    """

    log_file = settings.log_file
    if log_file is None or not Path(log_file).is_file():
        raise HTTPException(
            status_code=404,
            detail={
                "msg": "Log file not found",
                "input": {"log_path": log_file},
                "detail": None,
            },
        )
    return FileResponse(
        log_file,
        media_type="application/octet-stream",
        filename="epspectral.log",
    )


app.include_router(kernel_router)
app.include_router(experiments_router)
