import asyncio
import time
from pathlib import Path

from loguru import logger

from app.common.exceptions.spectral_exceptions import CacheInvalidError
from app.common.metrics.metrics import (
    KERNEL_BUILD_SECONDS,
    KERNEL_BUILDS,
    KERNEL_CACHE_HITS,
)
from app.dto.kernel_dto import KernelConfig
from app.spectral.kernel import KernelTable, build_table, load_table, save_table

from .caching_service import CachingService

CACHE_SUFFIX = ".bkmt"


class KernelCachingService(CachingService):
    """
    Kernel table caching service. Inherits from CachingService from caching_service.py.
    Tables are stored as <cache_path>/<config-hash-hex>.bkmt
    """

    suffix = CACHE_SUFFIX

    def __init__(self, kernel_cache_path: Path) -> None:

        super().__init__(kernel_cache_path)

    def table_path(self, config: KernelConfig) -> Path:
        return self.cached_path(config.config_hash.hex())

    async def check_path(self, config: KernelConfig) -> bool:
        """
        Function checks weather a cached table exists for the config
        Args:
            config (KernelConfig): kernel configuration
        Returns:
            bool: weather the cache file exists
        """

        return self.table_path(config).is_file()

    async def get_available_tables(self) -> list[str]:
        """Function returns config hashes of all cached tables"""

        return self.cached_keys()

    async def cache_table(self, table: KernelTable) -> Path:
        """
        Function writes a table to the cache directory
        Args:
            table (KernelTable): table to cache
        Returns:
            Path: cache file
        """

        path = await asyncio.to_thread(save_table, table, self.table_path(table.config))
        logger.info(f"Cached kernel table d={table.dim} N={table.order} to {path}")
        return path

    async def load_cached_table(self, config: KernelConfig) -> KernelTable:
        """
        Function loads a table from the cache
        Args:
            config (KernelConfig): expected configuration
        Returns:
            KernelTable: loaded table
        Raises:
            CacheInvalidError: stored table does not match config
            CacheFormatError: corrupt cache file
        """

        path = self.table_path(config)
        table = await asyncio.to_thread(load_table, path, config)
        KERNEL_CACHE_HITS.inc()
        logger.info(f"Loaded kernel table d={config.dim} N={config.order} from {path}")
        return table

    async def build_table(self, config: KernelConfig) -> KernelTable:

        started = time.perf_counter()
        table = await asyncio.to_thread(build_table, config)
        KERNEL_BUILDS.labels(dim=config.dim, order=config.order).inc()
        KERNEL_BUILD_SECONDS.observe(time.perf_counter() - started)
        return table

    async def get_table(
        self, config: KernelConfig, force: bool = False
    ) -> tuple[KernelTable, bool]:
        """
        Function returns the table for config, loading it from cache or building and caching it
        Args:
            config (KernelConfig): kernel configuration
            force (bool): rebuild even if a cached table exists
        Returns:
            tuple[KernelTable, bool]: table and weather it came from the cache
        """

        if not force and await self.check_path(config):
            try:
                return await self.load_cached_table(config), True
            except CacheInvalidError as e:
                logger.warning(f"Rebuilding kernel table: {e.msg}")
        else:
            logger.info(f"No cached kernel table for d={config.dim} N={config.order}")
        table = await self.build_table(config)
        await self.cache_table(table)
        return table, False
