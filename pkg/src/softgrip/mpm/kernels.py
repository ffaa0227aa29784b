"""Serial numba kernels for one MLS-MPM substep.

One substep = P2G scatter (mass/momentum with the fused stress force), grid
momentum update (gravity + collider velocity projection), G2P gather (velocity,
APIC affine matrix, position, deformation gradient, Cauchy stress, Von Mises).

All kernels are deliberately single-threaded with fixed iteration order: the
solver's determinism contract is bit-identical trajectories for identical
inputs, and parallel scatter would break that. Grid clearing is folded into
P2G via a stamp array, so per-substep cost scales with touched nodes only.
"""

import numpy as np
from numba import njit

# collider kind / surface mode codes shared with colliders.py
KIND_HALFSPACE = 0
KIND_BOX = 1
MODE_STICKY = 0
MODE_COULOMB = 1

# G2P return codes (>= 0 is an offending particle index)
OK = -1


@njit(cache=True)
def det3(m):
    return (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


@njit(cache=True)
def inv3(m, out):
    d = det3(m)
    invd = 1.0 / d
    out[0, 0] = (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]) * invd
    out[0, 1] = (m[0, 2] * m[2, 1] - m[0, 1] * m[2, 2]) * invd
    out[0, 2] = (m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]) * invd
    out[1, 0] = (m[1, 2] * m[2, 0] - m[1, 0] * m[2, 2]) * invd
    out[1, 1] = (m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]) * invd
    out[1, 2] = (m[0, 2] * m[1, 0] - m[0, 0] * m[1, 2]) * invd
    out[2, 0] = (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]) * invd
    out[2, 1] = (m[0, 1] * m[2, 0] - m[0, 0] * m[2, 1]) * invd
    out[2, 2] = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) * invd
    return d


@njit(cache=True)
def polar_rotation3(f, r, scratch):
    """Rotation factor of F via Newton iteration R <- (R + R^-T)/2."""
    for i in range(3):
        for j in range(3):
            r[i, j] = f[i, j]
    for _ in range(30):
        inv3(r, scratch)
        delta = 0.0
        for i in range(3):
            for j in range(3):
                nxt = 0.5 * (r[i, j] + scratch[j, i])
                d = nxt - r[i, j]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
                r[i, j] = nxt
        if delta < 1e-13:
            break


@njit(cache=True)
def bspline_weights(fx, w):
    """Quadratic B-spline weights for fx in [0.5, 1.5]^3; rows sum to 1."""
    for a in range(3):
        w[a, 0] = 0.5 * (1.5 - fx[a]) ** 2
        w[a, 1] = 0.75 - (fx[a] - 1.0) ** 2
        w[a, 2] = 0.5 * (fx[a] - 0.5) ** 2


@njit(cache=True)
def p2g(
    x, v, c_mat, sigma, jdet, mass, vol0,
    gm, gv, stamp, touched, stamp_val,
    base_buf, w_buf, fx_buf,
    dt, dx, inv_dx, origin,
):
    """Scatter mass and momentum (with fused stress force) onto the grid.

    Fills the per-particle base/weight caches reused by G2P. Returns the index
    of the first particle whose stencil leaves the grid interior, or OK.
    """
    n = x.shape[0]
    res0, res1, res2 = gm.shape
    n_touched = 0
    d_coeff = -dt * 4.0 * inv_dx * inv_dx
    for p in range(n):
        bx = int(np.floor((x[p, 0] - origin[0]) * inv_dx - 0.5))
        by = int(np.floor((x[p, 1] - origin[1]) * inv_dx - 0.5))
        bz = int(np.floor((x[p, 2] - origin[2]) * inv_dx - 0.5))
        if bx < 0 or by < 0 or bz < 0 or bx + 2 >= res0 or by + 2 >= res1 or bz + 2 >= res2:
            return p, n_touched
        base_buf[p, 0] = bx
        base_buf[p, 1] = by
        base_buf[p, 2] = bz
        fx_buf[p, 0] = (x[p, 0] - origin[0]) * inv_dx - bx
        fx_buf[p, 1] = (x[p, 1] - origin[1]) * inv_dx - by
        fx_buf[p, 2] = (x[p, 2] - origin[2]) * inv_dx - bz
        bspline_weights(fx_buf[p], w_buf[p])

        m_p = mass[p]
        coeff = d_coeff * vol0[p] * jdet[p]
        # affine = -dt * 4/dx^2 * V0 * (J * sigma) + m * C
        a00 = coeff * sigma[p, 0, 0] + m_p * c_mat[p, 0, 0]
        a01 = coeff * sigma[p, 0, 1] + m_p * c_mat[p, 0, 1]
        a02 = coeff * sigma[p, 0, 2] + m_p * c_mat[p, 0, 2]
        a10 = coeff * sigma[p, 1, 0] + m_p * c_mat[p, 1, 0]
        a11 = coeff * sigma[p, 1, 1] + m_p * c_mat[p, 1, 1]
        a12 = coeff * sigma[p, 1, 2] + m_p * c_mat[p, 1, 2]
        a20 = coeff * sigma[p, 2, 0] + m_p * c_mat[p, 2, 0]
        a21 = coeff * sigma[p, 2, 1] + m_p * c_mat[p, 2, 1]
        a22 = coeff * sigma[p, 2, 2] + m_p * c_mat[p, 2, 2]
        mv0 = m_p * v[p, 0]
        mv1 = m_p * v[p, 1]
        mv2 = m_p * v[p, 2]

        for i in range(3):
            dpos0 = (i - fx_buf[p, 0]) * dx
            wi = w_buf[p, 0, i]
            for j in range(3):
                dpos1 = (j - fx_buf[p, 1]) * dx
                wij = wi * w_buf[p, 1, j]
                for k in range(3):
                    dpos2 = (k - fx_buf[p, 2]) * dx
                    w = wij * w_buf[p, 2, k]
                    gi = bx + i
                    gj = by + j
                    gk = bz + k
                    if stamp[gi, gj, gk] != stamp_val:
                        stamp[gi, gj, gk] = stamp_val
                        gm[gi, gj, gk] = 0.0
                        gv[gi, gj, gk, 0] = 0.0
                        gv[gi, gj, gk, 1] = 0.0
                        gv[gi, gj, gk, 2] = 0.0
                        touched[n_touched, 0] = gi
                        touched[n_touched, 1] = gj
                        touched[n_touched, 2] = gk
                        n_touched += 1
                    gm[gi, gj, gk] += w * m_p
                    gv[gi, gj, gk, 0] += w * (mv0 + a00 * dpos0 + a01 * dpos1 + a02 * dpos2)
                    gv[gi, gj, gk, 1] += w * (mv1 + a10 * dpos0 + a11 * dpos1 + a12 * dpos2)
                    gv[gi, gj, gk, 2] += w * (mv2 + a20 * dpos0 + a21 * dpos1 + a22 * dpos2)
    return OK, n_touched


@njit(cache=True)
def collider_sdf_normal(kind, rot, pos, half, px, py, pz):
    """Signed distance and outward world normal of one collider at a point."""
    # local coordinates q = R^T (p - pos)
    dx0 = px - pos[0]
    dx1 = py - pos[1]
    dx2 = pz - pos[2]
    q0 = rot[0, 0] * dx0 + rot[1, 0] * dx1 + rot[2, 0] * dx2
    q1 = rot[0, 1] * dx0 + rot[1, 1] * dx1 + rot[2, 1] * dx2
    q2 = rot[0, 2] * dx0 + rot[1, 2] * dx1 + rot[2, 2] * dx2
    if kind == KIND_HALFSPACE:
        # occupied region z_local <= 0, outward normal +z_local
        return q2, rot[0, 2], rot[1, 2], rot[2, 2]
    # box: |q| <= half occupied
    e0 = abs(q0) - half[0]
    e1 = abs(q1) - half[1]
    e2 = abs(q2) - half[2]
    if e0 > 0.0 or e1 > 0.0 or e2 > 0.0:
        # outside: distance to the box, normal along the positive excess
        o0 = e0 if e0 > 0.0 else 0.0
        o1 = e1 if e1 > 0.0 else 0.0
        o2 = e2 if e2 > 0.0 else 0.0
        d = np.sqrt(o0 * o0 + o1 * o1 + o2 * o2)
        n0 = (o0 / d) * (1.0 if q0 >= 0.0 else -1.0)
        n1 = (o1 / d) * (1.0 if q1 >= 0.0 else -1.0)
        n2 = (o2 / d) * (1.0 if q2 >= 0.0 else -1.0)
    else:
        # inside: closest face
        d = e0
        axis = 0
        if e1 > d:
            d = e1
            axis = 1
        if e2 > d:
            d = e2
            axis = 2
        n0 = n1 = n2 = 0.0
        if axis == 0:
            n0 = 1.0 if q0 >= 0.0 else -1.0
        elif axis == 1:
            n1 = 1.0 if q1 >= 0.0 else -1.0
        else:
            n2 = 1.0 if q2 >= 0.0 else -1.0
    # rotate normal back to world
    w0 = rot[0, 0] * n0 + rot[0, 1] * n1 + rot[0, 2] * n2
    w1 = rot[1, 0] * n0 + rot[1, 1] * n1 + rot[1, 2] * n2
    w2 = rot[2, 0] * n0 + rot[2, 1] * n1 + rot[2, 2] * n2
    return d, w0, w1, w2


@njit(cache=True)
def grid_update(
    gm, gv, touched, n_touched,
    dt, dx, origin, gravity,
    col_kind, col_mode, col_friction, col_rot, col_pos, col_half, col_vlin, col_omega,
):
    """Momentum -> velocity, gravity, then collider velocity projection.

    Nodes strictly inside a collider get their inflowing normal velocity
    removed; sticky surfaces also kill the tangential component, Coulomb
    surfaces clamp it by mu * |removed normal velocity|. Separating nodes are
    left alone so material can lift off.
    """
    n_col = col_kind.shape[0]
    # bounding radius per box for a cheap reject before the frame transform
    col_bound2 = np.empty(n_col, dtype=np.float64)
    for c in range(n_col):
        col_bound2[c] = (
            col_half[c, 0] * col_half[c, 0]
            + col_half[c, 1] * col_half[c, 1]
            + col_half[c, 2] * col_half[c, 2]
        )
    for t in range(n_touched):
        gi = touched[t, 0]
        gj = touched[t, 1]
        gk = touched[t, 2]
        m = gm[gi, gj, gk]
        if m <= 0.0:
            continue
        vx = gv[gi, gj, gk, 0] / m + gravity[0] * dt
        vy = gv[gi, gj, gk, 1] / m + gravity[1] * dt
        vz = gv[gi, gj, gk, 2] / m + gravity[2] * dt
        px = origin[0] + gi * dx
        py = origin[1] + gj * dx
        pz = origin[2] + gk * dx
        for c in range(n_col):
            if col_kind[c] == KIND_HALFSPACE:
                # plane through col_pos with outward normal = local +z axis
                nx = col_rot[c, 0, 2]
                ny = col_rot[c, 1, 2]
                nz = col_rot[c, 2, 2]
                sd = (
                    (px - col_pos[c, 0]) * nx
                    + (py - col_pos[c, 1]) * ny
                    + (pz - col_pos[c, 2]) * nz
                )
                if sd >= 0.0:
                    continue
            else:
                d0 = px - col_pos[c, 0]
                d1 = py - col_pos[c, 1]
                d2 = pz - col_pos[c, 2]
                if d0 * d0 + d1 * d1 + d2 * d2 > col_bound2[c]:
                    continue
                sd, nx, ny, nz = collider_sdf_normal(
                    col_kind[c], col_rot[c], col_pos[c], col_half[c], px, py, pz
                )
                if sd >= 0.0:
                    continue
            # collider velocity at the node
            rx = px - col_pos[c, 0]
            ry = py - col_pos[c, 1]
            rz = pz - col_pos[c, 2]
            cvx = col_vlin[c, 0] + col_omega[c, 1] * rz - col_omega[c, 2] * ry
            cvy = col_vlin[c, 1] + col_omega[c, 2] * rx - col_omega[c, 0] * rz
            cvz = col_vlin[c, 2] + col_omega[c, 0] * ry - col_omega[c, 1] * rx
            relx = vx - cvx
            rely = vy - cvy
            relz = vz - cvz
            vn = relx * nx + rely * ny + relz * nz
            if vn >= 0.0:
                continue
            if col_mode[c] == MODE_STICKY:
                relx = 0.0
                rely = 0.0
                relz = 0.0
            else:
                relx -= vn * nx
                rely -= vn * ny
                relz -= vn * nz
                tnorm = np.sqrt(relx * relx + rely * rely + relz * relz)
                budget = -vn * col_friction[c]
                if tnorm <= budget or tnorm == 0.0:
                    relx = 0.0
                    rely = 0.0
                    relz = 0.0
                else:
                    scale = 1.0 - budget / tnorm
                    relx *= scale
                    rely *= scale
                    relz *= scale
            vx = cvx + relx
            vy = cvy + rely
            vz = cvz + relz
        gv[gi, gj, gk, 0] = vx
        gv[gi, gj, gk, 1] = vy
        gv[gi, gj, gk, 2] = vz


@njit(cache=True)
def g2p(
    x, v, c_mat, f_def, sigma, vm, jdet,
    gv, base_buf, w_buf, fx_buf,
    dt, dx, inv_dx, mu, lam, j_floor,
):
    """Gather velocities, advect, update F and refresh Cauchy stress/Von Mises.

    Returns the index of the first particle whose updated det(F) drops below
    ``j_floor`` (or is non-finite), or OK.
    """
    n = x.shape[0]
    r_buf = np.empty((3, 3), dtype=np.float64)
    scratch = np.empty((3, 3), dtype=np.float64)
    f_new = np.empty((3, 3), dtype=np.float64)
    four_inv_dx2 = 4.0 * inv_dx * inv_dx
    for p in range(n):
        bx = base_buf[p, 0]
        by = base_buf[p, 1]
        bz = base_buf[p, 2]
        nvx = 0.0
        nvy = 0.0
        nvz = 0.0
        b00 = 0.0
        b01 = 0.0
        b02 = 0.0
        b10 = 0.0
        b11 = 0.0
        b12 = 0.0
        b20 = 0.0
        b21 = 0.0
        b22 = 0.0
        for i in range(3):
            dpos0 = (i - fx_buf[p, 0]) * dx
            wi = w_buf[p, 0, i]
            for j in range(3):
                dpos1 = (j - fx_buf[p, 1]) * dx
                wij = wi * w_buf[p, 1, j]
                for k in range(3):
                    dpos2 = (k - fx_buf[p, 2]) * dx
                    w = wij * w_buf[p, 2, k]
                    gvx = gv[bx + i, by + j, bz + k, 0]
                    gvy = gv[bx + i, by + j, bz + k, 1]
                    gvz = gv[bx + i, by + j, bz + k, 2]
                    nvx += w * gvx
                    nvy += w * gvy
                    nvz += w * gvz
                    b00 += w * gvx * dpos0
                    b01 += w * gvx * dpos1
                    b02 += w * gvx * dpos2
                    b10 += w * gvy * dpos0
                    b11 += w * gvy * dpos1
                    b12 += w * gvy * dpos2
                    b20 += w * gvz * dpos0
                    b21 += w * gvz * dpos1
                    b22 += w * gvz * dpos2
        v[p, 0] = nvx
        v[p, 1] = nvy
        v[p, 2] = nvz
        x[p, 0] += dt * nvx
        x[p, 1] += dt * nvy
        x[p, 2] += dt * nvz
        c00 = four_inv_dx2 * b00
        c01 = four_inv_dx2 * b01
        c02 = four_inv_dx2 * b02
        c10 = four_inv_dx2 * b10
        c11 = four_inv_dx2 * b11
        c12 = four_inv_dx2 * b12
        c20 = four_inv_dx2 * b20
        c21 = four_inv_dx2 * b21
        c22 = four_inv_dx2 * b22
        c_mat[p, 0, 0] = c00
        c_mat[p, 0, 1] = c01
        c_mat[p, 0, 2] = c02
        c_mat[p, 1, 0] = c10
        c_mat[p, 1, 1] = c11
        c_mat[p, 1, 2] = c12
        c_mat[p, 2, 0] = c20
        c_mat[p, 2, 1] = c21
        c_mat[p, 2, 2] = c22
        # F <- (I + dt C) F
        g00 = 1.0 + dt * c00
        g01 = dt * c01
        g02 = dt * c02
        g10 = dt * c10
        g11 = 1.0 + dt * c11
        g12 = dt * c12
        g20 = dt * c20
        g21 = dt * c21
        g22 = 1.0 + dt * c22
        for col in range(3):
            f0 = f_def[p, 0, col]
            f1 = f_def[p, 1, col]
            f2 = f_def[p, 2, col]
            f_new[0, col] = g00 * f0 + g01 * f1 + g02 * f2
            f_new[1, col] = g10 * f0 + g11 * f1 + g12 * f2
            f_new[2, col] = g20 * f0 + g21 * f1 + g22 * f2
        j = det3(f_new)
        if not np.isfinite(j) or j < j_floor:
            return p
        for a in range(3):
            for b in range(3):
                f_def[p, a, b] = f_new[a, b]
        jdet[p] = j
        polar_rotation3(f_new, r_buf, scratch)
        # sigma = 2 mu / J (F - R) F^T + lam (J - 1) I, symmetrized
        two_mu_over_j = 2.0 * mu / j
        lam_term = lam * (j - 1.0)
        for a in range(3):
            for b in range(3):
                acc = 0.0
                for k in range(3):
                    acc += (f_new[a, k] - r_buf[a, k]) * f_new[b, k]
                sigma[p, a, b] = two_mu_over_j * acc
            sigma[p, a, a] += lam_term
        for a in range(3):
            for b in range(a + 1, 3):
                s = 0.5 * (sigma[p, a, b] + sigma[p, b, a])
                sigma[p, a, b] = s
                sigma[p, b, a] = s
        trace_third = (sigma[p, 0, 0] + sigma[p, 1, 1] + sigma[p, 2, 2]) / 3.0
        dev_sq = 0.0
        for a in range(3):
            for b in range(3):
                d = sigma[p, a, b]
                if a == b:
                    d -= trace_third
                dev_sq += d * d
        vm[p] = np.sqrt(1.5 * dev_sq)
    return OK
