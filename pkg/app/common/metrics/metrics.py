from prometheus_client import Counter, Histogram

KERNEL_BUILDS = Counter(
    "epspectral_kernel_builds_total",
    "Kernel tables computed from quadrature",
    ["dim", "order"],
)
KERNEL_CACHE_HITS = Counter(
    "epspectral_kernel_cache_hits_total", "Kernel tables loaded from the cache"
)
KERNEL_BUILD_SECONDS = Histogram(
    "epspectral_kernel_build_seconds",
    "Wall time of kernel table builds",
    buckets=(0.1, 0.5, 1, 5, 10, 30, 60, 300, 1800),
)
RUN_SECONDS = Histogram(
    "epspectral_run_seconds",
    "Wall time of solver runs",
    ["scheme"],
    buckets=(0.1, 1, 5, 10, 30, 60, 300, 1800),
)
RUN_FAILURES = Counter(
    "epspectral_run_failures_total", "Runs stopped by a numerical error", ["error_type"]
)
