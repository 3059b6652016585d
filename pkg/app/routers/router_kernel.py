from fastapi import APIRouter

from app.dependencies import experiments_service, kernel_caching_service
from app.dto.experiment_dto import KernelBuildSummary
from app.dto.kernel_dto import KernelConfig
from app.spectral.kernel import HASH_SIZE

kernel_router = APIRouter(prefix="/kernel", tags=["Kernel tables"])


@kernel_router.post("/build", response_model=KernelBuildSummary)
async def build_kernel(config: KernelConfig, force: bool = False) -> KernelBuildSummary:
    """
    Build the kernel table for the configuration and store it in the cache

    Params:

    - force (boolean): rebuild even if the table is cached. Defaults to False.
    """

    if not force and await kernel_caching_service.check_path(config):
        table = await kernel_caching_service.load_cached_table(config)
        path = kernel_caching_service.table_path(config)
        return KernelBuildSummary(
            path=str(path),
            config_hash=table.checksum.hex(),
            dim=config.dim,
            order=config.order,
            radial_nodes=config.radial_nodes,
            angular_nodes_q=config.angular_nodes_q,
            angular_nodes_omega=config.angular_nodes_omega,
            refinement_discrepancy=None,
            worst_pair=None,
            payload_sha256=path.read_bytes()[-HASH_SIZE:].hex(),
            cached=True,
        )
    return await experiments_service.build_kernel(config)


@kernel_router.get("/cached", response_model=list[str])
async def get_cached_tables() -> list[str]:
    """Router returns config hashes of cached kernel tables"""

    return await kernel_caching_service.get_available_tables()
