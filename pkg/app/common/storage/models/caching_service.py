from pathlib import Path


class CachingService:
    """
    Directory backed cache of files sharing one suffix, keyed by file stem.
    Attributes:
        caching_path (Path): cache directory, created on init
        suffix (str): file suffix of cache entries
    """

    suffix: str = ""

    def __init__(self, cache_path: Path) -> None:

        self.caching_path = cache_path
        self.caching_path.mkdir(parents=True, exist_ok=True)

    def cached_path(self, key: str) -> Path:
        return self.caching_path.joinpath(key + self.suffix)

    def cached_keys(self) -> list[str]:
        """Function returns the keys of all entries in the cache directory"""

        return sorted(
            file.name.removesuffix(self.suffix)
            for file in self.caching_path.iterdir()
            if file.is_file() and file.suffix == self.suffix
        )
