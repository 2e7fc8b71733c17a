"""Pure-numpy mode-contraction kernel (fallback backend).

A flat vector of length ``prod(dims)`` is viewed as a C-ordered tensor of
shape ``dims``.  Applying ``A_0 (x) A_1 (x) ... (x) A_{K-1}`` contracts each
mode with its factor.  Per step the leading axis is contracted with one big
GEMM and then cycled to the back, so after K steps the axis order is
restored.  Cost is O(sum_i m_i * prod(dims)) and the full Kronecker matrix
is never formed.
"""

import numpy as np


def apply_modes(mats, x):
    """Apply the Kronecker product of ``mats`` to the flat vector ``x``.

    ``mats[i]`` is an ``(m_i, m_i)`` complex matrix acting on mode ``i`` of
    the C-ordered tensor view of ``x``.
    """
    y = np.asarray(x, dtype=np.complex128)
    for a in mats:
        m = a.shape[0]
        # (A @ X).T flattened == contract leading axis, then roll it to the back
        y = (a @ y.reshape(m, -1)).T.reshape(-1)
    return y
