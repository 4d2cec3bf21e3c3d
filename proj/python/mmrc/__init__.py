# SPDX-License-Identifier: Apache-2.0
"""Multi-mode reservoir computing for massive MIMO-OFDM symbol detection."""
from ._mmrc import (  # noqa: F401
    als_fit_dense,
    detect,
    fold,
    mode_product,
    qam_demap,
    qam_map,
    run_experiment_config,
    solve_right_ls,
    spectral_radius,
    superblockdiag,
    tucker_eval,
    unfold,
)
