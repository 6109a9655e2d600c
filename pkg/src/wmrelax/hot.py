"""Backend dispatch for the hot integrand reductions."""

from .backend import USE_NUMBA

if USE_NUMBA:
    from ._hot_numba import (  # noqa: F401
        v2_sum, v2ip_sum, psi_sum, fv2_sum, chim1_sum,
        kernel_K_sum, d2_kernel_K_sum, v1_sum, v3_sum,
    )
else:
    from ._hot_numpy import (  # noqa: F401
        v2_sum, v2ip_sum, psi_sum, fv2_sum, chim1_sum,
        kernel_K_sum, d2_kernel_K_sum, v1_sum, v3_sum,
    )
