"""Numba stencil kernels for the Yee update.

Field layout (C order, k fastest)::

    ex (nx, ny+1, nz+1)   ey (nx+1, ny, nz+1)   ez (nx+1, ny+1, nz)
    hx (nx+1, ny, nz)     hy (nx, ny+1, nz)     hz (nx, ny, nz+1)

E-edges on the outer walls are never written, which makes the outer
boundary PEC.  Every E-edge carries a material id indexing the ``ca``/``cb``
tables; id 0 is PEC (ca = cb = 0).  Each kernel parallelizes over the
outermost index only and touches disjoint slabs, so results do not depend
on the thread count.
"""

from numba import njit, prange

_opts = dict(parallel=True, cache=True, fastmath=False, nogil=True)


@njit(**_opts)
def update_h(ex, ey, ez, hx, hy, hz, ch, ihx, ihy, ihz):
    nx = hz.shape[0]
    ny = hz.shape[1]
    nz = hx.shape[2]
    for i in prange(nx + 1):
        for j in range(ny):
            ay = ch * ihy[j]
            for k in range(nz):
                hx[i, j, k] -= ay * (ez[i, j + 1, k] - ez[i, j, k]) - ch * ihz[k] * (ey[i, j, k + 1] - ey[i, j, k])
    for i in prange(nx):
        ax = ch * ihx[i]
        for j in range(ny + 1):
            for k in range(nz):
                hy[i, j, k] -= ch * ihz[k] * (ex[i, j, k + 1] - ex[i, j, k]) - ax * (ez[i + 1, j, k] - ez[i, j, k])
    for i in prange(nx):
        ax = ch * ihx[i]
        for j in range(ny):
            ay = ch * ihy[j]
            for k in range(nz + 1):
                hz[i, j, k] -= ax * (ey[i + 1, j, k] - ey[i, j, k]) - ay * (ex[i, j + 1, k] - ex[i, j, k])


@njit(**_opts)
def update_e(ex, ey, ez, hx, hy, hz, mx, my, mz, ca, cb, iex, iey, iez):
    nx = hz.shape[0]
    ny = hz.shape[1]
    nz = hx.shape[2]
    for i in prange(nx):
        for j in range(1, ny):
            for k in range(1, nz):
                m = mx[i, j, k]
                ex[i, j, k] = ca[m] * ex[i, j, k] + cb[m] * (
                    (hz[i, j, k] - hz[i, j - 1, k]) * iey[j] - (hy[i, j, k] - hy[i, j, k - 1]) * iez[k])
    for i in prange(1, nx):
        for j in range(ny):
            for k in range(1, nz):
                m = my[i, j, k]
                ey[i, j, k] = ca[m] * ey[i, j, k] + cb[m] * (
                    (hx[i, j, k] - hx[i, j, k - 1]) * iez[k] - (hz[i, j, k] - hz[i - 1, j, k]) * iex[i])
    for i in prange(1, nx):
        for j in range(1, ny):
            for k in range(nz):
                m = mz[i, j, k]
                ez[i, j, k] = ca[m] * ez[i, j, k] + cb[m] * (
                    (hy[i, j, k] - hy[i - 1, j, k]) * iex[i] - (hx[i, j, k] - hx[i, j - 1, k]) * iey[j])


# --- CPML auxiliary updates ------------------------------------------------
# psi arrays store the recursive convolution only on the listed PML indices.

@njit(**_opts)
def cpml_e_x(ey, ez, hy, hz, my, mz, cb, idx, b, c, inv_d, psi_y, psi_z):
    ny = ey.shape[1]
    nz = ez.shape[2]
    for a in prange(idx.shape[0]):
        i = idx[a]
        for j in range(ny):
            for k in range(1, nz):
                p = b[a] * psi_y[a, j, k] + c[a] * (hz[i, j, k] - hz[i - 1, j, k]) * inv_d
                psi_y[a, j, k] = p
                ey[i, j, k] -= cb[my[i, j, k]] * p
        for j in range(1, ny):
            for k in range(nz):
                p = b[a] * psi_z[a, j, k] + c[a] * (hy[i, j, k] - hy[i - 1, j, k]) * inv_d
                psi_z[a, j, k] = p
                ez[i, j, k] += cb[mz[i, j, k]] * p


@njit(**_opts)
def cpml_e_y(ex, ez, hx, hz, mx, mz, cb, idx, b, c, inv_d, psi_x, psi_z):
    nx = ex.shape[0]
    nz = ez.shape[2]
    for i in prange(nx + 1):
        for a in range(idx.shape[0]):
            j = idx[a]
            if i < nx:
                for k in range(1, nz):
                    p = b[a] * psi_x[i, a, k] + c[a] * (hz[i, j, k] - hz[i, j - 1, k]) * inv_d
                    psi_x[i, a, k] = p
                    ex[i, j, k] += cb[mx[i, j, k]] * p
            if 0 < i < nx:
                for k in range(nz):
                    p = b[a] * psi_z[i, a, k] + c[a] * (hx[i, j, k] - hx[i, j - 1, k]) * inv_d
                    psi_z[i, a, k] = p
                    ez[i, j, k] -= cb[mz[i, j, k]] * p


@njit(**_opts)
def cpml_e_z(ex, ey, hx, hy, mx, my, cb, idx, b, c, inv_d, psi_x, psi_y):
    nx = ex.shape[0]
    ny = ey.shape[1]
    for i in prange(nx + 1):
        if i < nx:
            for j in range(1, ny):
                for a in range(idx.shape[0]):
                    k = idx[a]
                    p = b[a] * psi_x[i, j, a] + c[a] * (hy[i, j, k] - hy[i, j, k - 1]) * inv_d
                    psi_x[i, j, a] = p
                    ex[i, j, k] -= cb[mx[i, j, k]] * p
        if 0 < i < nx:
            for j in range(ny):
                for a in range(idx.shape[0]):
                    k = idx[a]
                    p = b[a] * psi_y[i, j, a] + c[a] * (hx[i, j, k] - hx[i, j, k - 1]) * inv_d
                    psi_y[i, j, a] = p
                    ey[i, j, k] += cb[my[i, j, k]] * p


@njit(**_opts)
def cpml_h_x(ey, ez, hy, hz, ch, idx, b, c, inv_d, psi_y, psi_z):
    ny = hz.shape[1]
    nz = hy.shape[2]
    for a in prange(idx.shape[0]):
        i = idx[a]
        for j in range(ny + 1):
            for k in range(nz):
                p = b[a] * psi_y[a, j, k] + c[a] * (ez[i + 1, j, k] - ez[i, j, k]) * inv_d
                psi_y[a, j, k] = p
                hy[i, j, k] += ch * p
        for j in range(ny):
            for k in range(nz + 1):
                p = b[a] * psi_z[a, j, k] + c[a] * (ey[i + 1, j, k] - ey[i, j, k]) * inv_d
                psi_z[a, j, k] = p
                hz[i, j, k] -= ch * p


@njit(**_opts)
def cpml_h_y(ex, ez, hx, hz, ch, idx, b, c, inv_d, psi_x, psi_z):
    nx = hz.shape[0]
    nz = hx.shape[2]
    for i in prange(nx + 1):
        for a in range(idx.shape[0]):
            j = idx[a]
            for k in range(nz):
                p = b[a] * psi_x[i, a, k] + c[a] * (ez[i, j + 1, k] - ez[i, j, k]) * inv_d
                psi_x[i, a, k] = p
                hx[i, j, k] -= ch * p
            if i < nx:
                for k in range(nz + 1):
                    p = b[a] * psi_z[i, a, k] + c[a] * (ex[i, j + 1, k] - ex[i, j, k]) * inv_d
                    psi_z[i, a, k] = p
                    hz[i, j, k] += ch * p


@njit(**_opts)
def cpml_h_z(ex, ey, hx, hy, ch, idx, b, c, inv_d, psi_x, psi_y):
    nx = hy.shape[0]
    ny = hx.shape[1]
    for i in prange(nx + 1):
        for j in range(ny):
            for a in range(idx.shape[0]):
                k = idx[a]
                p = b[a] * psi_x[i, j, a] + c[a] * (ey[i, j, k + 1] - ey[i, j, k]) * inv_d
                psi_x[i, j, a] = p
                hx[i, j, k] += ch * p
        if i < nx:
            for j in range(ny + 1):
                for a in range(idx.shape[0]):
                    k = idx[a]
                    p = b[a] * psi_y[i, j, a] + c[a] * (ex[i, j, k + 1] - ex[i, j, k]) * inv_d
                    psi_y[i, j, a] = p
                    hy[i, j, k] -= ch * p


@njit(parallel=True, cache=True)
def dft_accumulate(acc, field, phase_re, phase_im):
    """acc[f] += field * exp(-j w t) * weight, for every monitored frequency.

    ``acc`` is complex128 of shape (nf,) + field.shape flattened to 2-D.
    """
    nf = acc.shape[0]
    n = field.shape[0]
    for p in prange(n):
        v = float(field[p])
        for f in range(nf):
            acc[f, p] += complex(v * phase_re[f], v * phase_im[f])
