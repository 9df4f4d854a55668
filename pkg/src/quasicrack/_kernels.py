"""Compiled inner loops: masked CG and batched tridiagonal solves.

Everything here works on plain arrays so numba can compile it once and
reuse the cached machine code across runs. Masked vectors carry zeros on
constrained entries; the matrix stays in full CSR form and constrained
rows/columns are skipped on the fly, which avoids re-extracting a
submatrix every time the constraint set changes.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def csr_matvec_masked(indptr, indices, data, x, mask, out):
    """out = A x restricted to free rows/columns; constrained entries get 0."""
    n = x.shape[0]
    for i in range(n):
        if not mask[i]:
            out[i] = 0.0
            continue
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if mask[j]:
                acc += data[p] * x[j]
        out[i] = acc


@njit(cache=True)
def pcg_jacobi(indptr, indices, data, inv_diag, b, x, mask, rel_tol, max_iter):
    """Preconditioned CG with a diagonal preconditioner on the masked system.

    Solves A_ff x_f = b_f in place, where the free set is given by `mask`.
    `b` and `x` are full-length; constrained entries are ignored and left
    untouched at zero. Returns (iterations, relative_residual).
    """
    n = b.shape[0]
    r = np.empty(n)
    z = np.empty(n)
    p = np.empty(n)
    ap = np.empty(n)

    b_norm2 = 0.0
    for i in range(n):
        if mask[i]:
            b_norm2 += b[i] * b[i]
    if b_norm2 == 0.0:
        for i in range(n):
            if mask[i]:
                x[i] = 0.0
        return 0, 0.0
    tol2 = rel_tol * rel_tol * b_norm2

    csr_matvec_masked(indptr, indices, data, x, mask, ap)
    rz = 0.0
    r_norm2 = 0.0
    for i in range(n):
        if mask[i]:
            r[i] = b[i] - ap[i]
            z[i] = inv_diag[i] * r[i]
            p[i] = z[i]
            rz += r[i] * z[i]
            r_norm2 += r[i] * r[i]
        else:
            r[i] = 0.0
            z[i] = 0.0
            p[i] = 0.0

    it = 0
    while r_norm2 > tol2 and it < max_iter:
        csr_matvec_masked(indptr, indices, data, p, mask, ap)
        pap = 0.0
        for i in range(n):
            if mask[i]:
                pap += p[i] * ap[i]
        alpha = rz / pap
        r_norm2 = 0.0
        rz_new = 0.0
        for i in range(n):
            if mask[i]:
                x[i] += alpha * p[i]
                r[i] -= alpha * ap[i]
                z[i] = inv_diag[i] * r[i]
                rz_new += r[i] * z[i]
                r_norm2 += r[i] * r[i]
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            if mask[i]:
                p[i] = z[i] + beta * p[i]
        it += 1

    return it, np.sqrt(r_norm2 / b_norm2)


@njit(cache=True)
def tridiag_factor(diag, off):
    """Thomas factorization of a batch of tridiagonal systems.

    diag has shape (n, m), off (n-1, m): column m holds one system.
    Returns (denom, cprime) with the same shapes, ready for
    `tridiag_solve_batch`. All systems must be factorizable without
    pivoting, which holds for the SPD systems assembled here.
    """
    n, m = diag.shape
    denom = np.empty_like(diag)
    cprime = np.empty_like(off)
    for j in range(m):
        denom[0, j] = diag[0, j]
    if n > 1:
        for j in range(m):
            cprime[0, j] = off[0, j] / denom[0, j]
    for k in range(1, n):
        for j in range(m):
            denom[k, j] = diag[k, j] - off[k - 1, j] * cprime[k - 1, j]
        if k < n - 1:
            for j in range(m):
                cprime[k, j] = off[k, j] / denom[k, j]
    return denom, cprime


@njit(cache=True)
def tridiag_solve_batch(denom, cprime, off, rhs, out):
    """Solve the factored batch for one right-hand side per column."""
    n, m = denom.shape
    for j in range(m):
        out[0, j] = rhs[0, j] / denom[0, j]
    for k in range(1, n):
        for j in range(m):
            out[k, j] = (rhs[k, j] - off[k - 1, j] * out[k - 1, j]) / denom[k, j]
    for k in range(n - 2, -1, -1):
        for j in range(m):
            out[k, j] -= cprime[k, j] * out[k + 1, j]
