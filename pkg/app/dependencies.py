from pathlib import Path

from prometheus_client import start_http_server

from app.common.experiments.experiments_service import ExperimentsService
from app.common.logs.loging import init_logger
from app.common.settings import AppSettings
from app.common.storage.models.kernel_caching_service import KernelCachingService

settings = AppSettings()
init_logger(settings.log_level, settings.log_file)

if settings.prometheus_port is not None:
    start_http_server(settings.prometheus_port)

kernel_caching_service = KernelCachingService(
    Path().absolute() / settings.kernel_cache_dir
)
experiments_service = ExperimentsService(kernel_caching_service)
