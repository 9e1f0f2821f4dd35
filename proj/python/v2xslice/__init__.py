"""Network-sliced C-V2X highway simulator."""

import os
from pathlib import Path

# an installed wheel carries its own data files; a source build knows its tree
_data = Path(__file__).parent / "data"
if _data.is_dir():
    os.environ.setdefault("V2XSLICE_DATA_DIR", str(_data))

from ._core import (  # noqa: E402
    Config,
    ConfigError,
    InvariantViolation,
    bicm_capacity,
    bler,
    default_data_dir,
    eigengap_count,
    generate_drop,
    laplacian_eigenvalues,
    miesm_effective_sinr,
    pathloss_v2i,
    pathloss_v2v,
    prr,
    rate_cdf,
    run,
    run_matrix,
    select_mcs,
    sha256_file,
    similarity,
    simulate,
)

__all__ = [
    "Config",
    "ConfigError",
    "InvariantViolation",
    "bicm_capacity",
    "bler",
    "default_data_dir",
    "eigengap_count",
    "generate_drop",
    "laplacian_eigenvalues",
    "miesm_effective_sinr",
    "pathloss_v2i",
    "pathloss_v2v",
    "prr",
    "rate_cdf",
    "run",
    "run_matrix",
    "select_mcs",
    "sha256_file",
    "similarity",
    "simulate",
]
