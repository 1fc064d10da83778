"""Secure-deletion laboratory: simulated NAND, a log-structured file system and
user-level deletion mechanisms."""

from ._sdlab import (
    BalloonAction,
    BallooningAgent,
    BallooningConfig,
    Error,
    FileSystem,
    FreeSpace,
    FsConfig,
    GcMode,
    Medium,
    MediumGeometry,
    PurgeReport,
    ScanHit,
    allocation_rate,
    confidence_interval,
    deletion_latency,
    expected_lifetime,
    load_profile,
    load_profile_file,
    nearest_rank,
    purge,
    rank_correlation,
    run_simulation,
    set_zero_overwrite,
)

__all__ = [name for name in dir() if not name.startswith("_")]
