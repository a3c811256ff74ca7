# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled top-k row selection for the exact kNN search."""


def topk_rows(const double[:, ::1] sims, Py_ssize_t row_offset, int k,
              Py_ssize_t[:, ::1] out_idx, double[:, ::1] out_val):
    """Fill ``out_idx``/``out_val`` with the k largest entries of each row.

    Row ``r`` of ``sims`` is global row ``row_offset + r``; its own column is
    skipped. Order is value descending, then column ascending. Requires
    ``k < sims.shape[1]``.
    """
    cdef Py_ssize_t nrows = sims.shape[0], ncols = sims.shape[1]
    cdef Py_ssize_t r, j, pos, m, self_col
    cdef double v
    if k < 1 or k >= ncols:
        raise ValueError("k must satisfy 1 <= k < number of columns")
    if out_idx.shape[0] < nrows or out_idx.shape[1] < k or out_val.shape[0] < nrows or out_val.shape[1] < k:
        raise ValueError("output buffers too small")
    with nogil:
        for r in range(nrows):
            self_col = row_offset + r
            m = 0
            for j in range(ncols):
                if j == self_col:
                    continue
                v = sims[r, j]
                if m == k:
                    # columns arrive in increasing order, so a tie with the
                    # current worst loses
                    if v <= out_val[r, k - 1]:
                        continue
                    pos = k - 1
                else:
                    pos = m
                    m += 1
                while pos > 0 and out_val[r, pos - 1] < v:
                    out_val[r, pos] = out_val[r, pos - 1]
                    out_idx[r, pos] = out_idx[r, pos - 1]
                    pos -= 1
                out_val[r, pos] = v
                out_idx[r, pos] = j
