"""Pure numpy implementation of the kernels in ``_kernels.pyx``."""
import numpy as np


def topk_rows(sims, row_offset, k, out_idx, out_val):
    sims = np.array(sims, dtype=np.float64, copy=True)
    nrows, ncols = sims.shape
    if k < 1 or k >= ncols:
        raise ValueError("k must satisfy 1 <= k < number of columns")
    if nrows == 0:
        return
    rows = np.arange(nrows)
    sims[rows, row_offset + rows] = -np.inf
    # k-th largest value per row; every entry >= it is a candidate, ties included
    kth = -np.partition(-sims, k - 1, axis=1)[:, k - 1]
    cand_r, cand_c = np.nonzero(sims >= kth[:, None])
    cand_v = sims[cand_r, cand_c]
    order = np.lexsort((cand_c, -cand_v, cand_r))
    cand_r, cand_c, cand_v = cand_r[order], cand_c[order], cand_v[order]
    starts = np.searchsorted(cand_r, rows)
    take = (starts[:, None] + np.arange(k)[None, :]).ravel()
    out_idx[:nrows, :k] = cand_c[take].reshape(nrows, k)
    out_val[:nrows, :k] = cand_v[take].reshape(nrows, k)
