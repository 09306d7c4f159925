"""Compiled inner loops of the nonlinear block Gauss-Seidel smoother."""

import numba as nb
import numpy as np

_jit = {"nogil": True, "cache": True}


@nb.njit(**_jit)
def _local_cubic(i, phi, tris, area, node_elem_ptr, node_elem, node_local):
    """Coefficients of (phi_h**3, u_i) as a cubic in phi_i, other nodes frozen.

    Uses the exact barycentric moments on each incident triangle.
    """
    c3 = 0.0
    c2 = 0.0
    c1 = 0.0
    c0 = 0.0
    for k in range(node_elem_ptr[i], node_elem_ptr[i + 1]):
        e = node_elem[k]
        a = node_local[k]
        pb = phi[tris[e, (a + 1) % 3]]
        pc = phi[tris[e, (a + 2) % 3]]
        ar = area[e]
        c3 += ar / 15.0
        c2 += ar * (pb + pc) / 20.0
        c1 += ar * (pb * pb + pc * pc + pb * pc) / 30.0
        c0 += ar * (pb * pb * pb + pb * pb * pc + pb * pc * pc + pc * pc * pc) / 60.0
    return c3, c2, c1, c0


@nb.njit(**_jit)
def solve_local_cubic(lin, c3, c2, c1, rhs, eps, x0, max_iter, tol):
    """Root of ``lin*x + (c3 x^3 + c2 x^2 + c1 x)/eps = rhs`` (monotone increasing).

    Newton from ``x0``; any step leaving the sign bracket found so far is
    replaced by bisection.  Returns ``(x, converged)``.
    """
    lo = -np.inf
    hi = np.inf
    x = x0
    for _ in range(max_iter):
        f = lin * x + ((c3 * x + c2) * x + c1) * x / eps - rhs
        if f == 0.0:
            return x, True
        if f > 0.0:
            hi = x
        else:
            lo = x
        df = lin + ((3.0 * c3 * x + 2.0 * c2) * x + c1) / eps
        xn = x - f / df
        if abs(xn - x) <= tol * max(1.0, abs(x)):
            return xn, True
        # Newton moves toward the root, so it can only overshoot a finite end
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        x = xn
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi), False
    return x, False


@nb.njit(**_jit)
def block_gauss_seidel(indptr, indices, diag, A, M, B, C,
                       tris, area, node_elem_ptr, node_elem, node_local,
                       p, mu, phi, s1, s2, s3,
                       eps, gamma, tau, sweeps, max_newton, newton_tol):
    """Forward lexicographic sweeps, updating ``(p_i, mu_i, phi_i)`` together.

    Rows ``i`` of the three block equations are solved with every other
    nodal value frozen: the first two rows give ``p_i`` and ``mu_i`` as affine
    functions of ``phi_i``, and the third row reduces to a monotone scalar
    cubic.  With ``gamma == 0`` the pressure is left untouched.  Returns the
    number of local solves that hit ``max_newton``.
    """
    n = p.shape[0]
    flags = 0
    for _ in range(sweeps):
        for i in range(n):
            r1 = s1[i]
            r2 = s2[i]
            r3 = s3[i]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j == i:
                    continue
                r1 -= A[k] * p[j] + gamma * C[k] * mu[j]
                r2 -= M[k] * phi[j] + tau * (eps * A[k] + gamma * B[k]) * mu[j] + tau * C[k] * p[j]
                r3 -= eps * A[k] * phi[j] - M[k] * mu[j]
            d = diag[i]
            aii = A[d]
            mii = M[d]
            c3, c2, c1, c0 = _local_cubic(i, phi, tris, area, node_elem_ptr, node_elem, node_local)
            r3 -= c0 / eps
            if gamma != 0.0:
                a11 = aii
                a12 = gamma * C[d]
                a21 = tau * C[d]
                a22 = tau * (eps * aii + gamma * B[d])
                det = a11 * a22 - a12 * a21
                alpha = (a11 * r2 - a21 * r1) / det
                beta = -a11 * mii / det
                pa = (a22 * r1 - a12 * r2) / det
                pb = a12 * mii / det
            else:
                a22 = tau * eps * aii
                alpha = (r2 - tau * C[d] * p[i]) / a22
                beta = -mii / a22
                pa = 0.0
                pb = 0.0
            lin = eps * aii - mii * beta
            x, ok = solve_local_cubic(lin, c3, c2, c1, r3 + mii * alpha, eps,
                                      phi[i], max_newton, newton_tol)
            if not ok:
                flags += 1
            phi[i] = x
            mu[i] = alpha + beta * x
            if gamma != 0.0:
                p[i] = pa + pb * x
    return flags


@nb.njit(**_jit)
def cubic_load(tris, area, psi, out):
    """out_i = (psi_h**3, u_i), from exact barycentric moments."""
    out[:] = 0.0
    for e in range(tris.shape[0]):
        ar = area[e]
        for a in range(3):
            pa = psi[tris[e, a]]
            pb = psi[tris[e, (a + 1) % 3]]
            pc = psi[tris[e, (a + 2) % 3]]
            out[tris[e, a]] += ar * (
                pa * pa * pa / 15.0
                + pa * pa * (pb + pc) / 20.0
                + pa * (pb * pb + pc * pc + pb * pc) / 30.0
                + (pb * pb * pb + pb * pb * pc + pb * pc * pc + pc * pc * pc) / 60.0
            )
    return out


@nb.njit(**_jit)
def block_operator(indptr, indices, A, M, B, C, tris, area,
                   p, mu, phi, eps, gamma, tau, n1, n2, n3):
    """The three block rows of the nonlinear operator, written into n1, n2, n3."""
    cubic_load(tris, area, phi, n3)
    for i in range(p.shape[0]):
        r1 = 0.0
        r2 = 0.0
        r3 = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            r1 += A[k] * p[j] + gamma * C[k] * mu[j]
            r2 += M[k] * phi[j] + tau * (eps * A[k] + gamma * B[k]) * mu[j] + tau * C[k] * p[j]
            r3 += eps * A[k] * phi[j] - M[k] * mu[j]
        n1[i] = r1
        n2[i] = r2
        n3[i] = r3 + n3[i] / eps
