"""Pure-NumPy fallback for the simulator hot loops.

Same contracts as the compiled extension in ``_kernels.pyx``; selected at
import by ``_backend`` when the extension is unavailable or when
``SDWTC_FORCE_PY=1``.
"""

import numpy as np

BACKEND = "numpy"


def cell_log_weights(logq, uv_idx, s_seq, card_s):
    """Per-cell block log-weights: sum_t logq[(u,v)_t, s_t].

    logq is flattened [(u*V+v)*card_s + s]; uv_idx is [cells, n]; s_seq [n].
    """
    return logq[uv_idx * card_s + s_seq[np.newaxis, :]].sum(axis=1)


def typical_cells(puv, y_seq, card_y, q_flat, eps):
    """Mask of cells whose (u,v,y) empirical type is within eps of q_flat.

    puv is [cells, n] with entries u*V+v; the letter-typicality condition is
    |count/n - q| <= eps*q for every (u,v,y) triple, zero-probability triples
    included (they force exact zero counts).
    """
    cells, n = puv.shape
    t = q_flat.size
    tri = puv * card_y + y_seq[np.newaxis, :]
    flat = (tri + (np.arange(cells) * t)[:, np.newaxis]).ravel()
    counts = np.bincount(flat, minlength=cells * t).reshape(cells, t)
    nu = counts / float(n)
    ok = np.abs(nu - q_flat[np.newaxis, :]) <= eps * q_flat[np.newaxis, :]
    return ok.all(axis=1).astype(np.uint8)
