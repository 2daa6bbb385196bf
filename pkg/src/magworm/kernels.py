"""Compiled inner loops: scene SDF queries and the semi-implicit time stepper.

Everything here works on plain float64/int64 arrays so numba can compile it once
and the engine can batch millions of steps without Python overhead. The numpy
implementations in mechanics/environment are the readable reference; tests pin
this module against them.

Status codes returned by the stepper:
    0 ok, 1 degenerate edge, 2 non-finite force/velocity, 3 velocity blowup.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

K_DIPOLE = 1e-7  # mu0 / 4 pi
NORMAL_STEP = 1e-6
VEL_LIMIT = 10.0         # m/s; beyond this the integrator aborts
HINT_WINDOW = 3          # polyline segments searched around the cached nearest index
NORMAL_REFRESH = 16      # steps between contact-normal refreshes (absolute schedule)


@njit(cache=True)
def _poly_dist_window(px, py, pz, pts, start, count, hint):
    """Distance to a polyline; searches around `hint`, expanding while the best
    index touches the window edge. hint < 0 forces a full scan. Returns
    (distance, best_segment_index_rel)."""
    nseg = count - 1
    if nseg <= 0:
        dx = px - pts[start, 0]
        dy = py - pts[start, 1]
        dz = pz - pts[start, 2]
        return math.sqrt(dx * dx + dy * dy + dz * dz), 0
    if hint < 0 or hint >= nseg:
        lo, hi = 0, nseg
    else:
        lo = hint - HINT_WINDOW
        hi = hint + HINT_WINDOW + 1
        if lo < 0:
            lo = 0
        if hi > nseg:
            hi = nseg
    best = 1e300
    best_i = lo
    while True:
        for i in range(lo, hi):
            ax = pts[start + i, 0]
            ay = pts[start + i, 1]
            az = pts[start + i, 2]
            abx = pts[start + i + 1, 0] - ax
            aby = pts[start + i + 1, 1] - ay
            abz = pts[start + i + 1, 2] - az
            apx = px - ax
            apy = py - ay
            apz = pz - az
            denom = abx * abx + aby * aby + abz * abz
            t = 0.0
            if denom > 0.0:
                t = (apx * abx + apy * aby + apz * abz) / denom
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            dx = apx - t * abx
            dy = apy - t * aby
            dz = apz - t * abz
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if d < best:
                best = d
                best_i = i
        grew = False
        if best_i == lo and lo > 0:
            lo = max(0, lo - 2 * HINT_WINDOW)
            grew = True
        if best_i == hi - 1 and hi < nseg:
            hi = min(nseg, hi + 2 * HINT_WINDOW)
            grew = True
        if not grew:
            return best, best_i


@njit(cache=True)
def _sdf_value_st(px, py, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack):
    top = 0
    for s in range(program.shape[0]):
        tok = program[s]
        if tok >= 0:
            kind = prim_kind[tok]
            q = prim_params[tok]
            if kind == 0:
                d, bi = _poly_dist_window(px, py, pz, poly_pts,
                                          poly_off[tok, 0], poly_off[tok, 1], hints[tok])
                hints[tok] = bi
                v = q[0] - d
            elif kind == 1:
                dx = px - q[0]
                dy = py - q[1]
                dz = pz - q[2]
                v = q[3] - math.sqrt(dx * dx + dy * dy + dz * dz)
            elif kind == 2:
                ax = q[3] - abs(px - q[0])
                ay = q[4] - abs(py - q[1])
                az = q[5] - abs(pz - q[2])
                v = min(ax, min(ay, az))
            elif kind == 3:
                axis = int(q[0])
                pa = px
                if axis == 1:
                    pa = py
                elif axis == 2:
                    pa = pz
                v = min(pa - q[1], q[2] - pa)
            else:
                nx = q[3]
                ny = q[4]
                nz = q[5]
                nn = math.sqrt(nx * nx + ny * ny + nz * nz)
                nx /= nn
                ny /= nn
                nz /= nn
                rx = px - q[0]
                ry = py - q[1]
                rz = pz - q[2]
                pr = rx * nx + ry * ny + rz * nz
                qx = rx - pr * nx
                qy = ry - pr * ny
                qz = rz - pr * nz
                v = q[6] - math.sqrt(qx * qx + qy * qy + qz * qz)
            stack[top] = v
            top += 1
        elif tok == -1:
            top -= 1
            if stack[top] > stack[top - 1]:
                stack[top - 1] = stack[top]
        elif tok == -2:
            top -= 1
            if stack[top] < stack[top - 1]:
                stack[top - 1] = stack[top]
        else:
            stack[top - 1] = -stack[top - 1]
    return stack[0]


@njit(cache=True)
def sdf_value(px, py, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints):
    """Postfix CSG evaluation of the lumen distance (positive inside)."""
    stack = np.empty(16)
    return _sdf_value_st(px, py, pz, prim_kind, prim_params, poly_pts, poly_off,
                         program, hints, stack)


@njit(cache=True)
def _sdf_dist_normal_st(px, py, pz, prim_kind, prim_params, poly_pts, poly_off,
                        program, hints, stack):
    d = _sdf_value_st(px, py, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack)
    h = NORMAL_STEP
    gx = (_sdf_value_st(px + h, py, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack)
          - _sdf_value_st(px - h, py, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack))
    gy = (_sdf_value_st(px, py + h, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack)
          - _sdf_value_st(px, py - h, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack))
    gz = (_sdf_value_st(px, py, pz + h, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack)
          - _sdf_value_st(px, py, pz - h, prim_kind, prim_params, poly_pts, poly_off, program, hints, stack))
    norm = math.sqrt(gx * gx + gy * gy + gz * gz)
    if norm > 0.0:
        gx /= norm
        gy /= norm
        gz /= norm
    else:
        gx, gy, gz = 0.0, 0.0, 1.0
    return d, gx, gy, gz


@njit(cache=True)
def sdf_dist_normal(px, py, pz, prim_kind, prim_params, poly_pts, poly_off, program, hints):
    """Distance plus inward unit normal via central differences."""
    stack = np.empty(16)
    return _sdf_dist_normal_st(px, py, pz, prim_kind, prim_params, poly_pts, poly_off,
                               program, hints, stack)


@njit(cache=True)
def flow_at(px, py, pz, flow_kind, flow_params, poly_pts, poly_off, flow_poly, hints):
    if flow_kind == 1:
        return flow_params[0], flow_params[1], flow_params[2]
    if flow_kind == 2:
        start = poly_off[flow_poly, 0]
        count = poly_off[flow_poly, 1]
        d, bi = _poly_dist_window(px, py, pz, poly_pts, start, count, hints[flow_poly])
        hints[flow_poly] = bi
        tx = poly_pts[start + bi + 1, 0] - poly_pts[start + bi, 0]
        ty = poly_pts[start + bi + 1, 1] - poly_pts[start + bi, 1]
        tz = poly_pts[start + bi + 1, 2] - poly_pts[start + bi, 2]
        tn = math.sqrt(tx * tx + ty * ty + tz * tz)
        if tn > 0.0:
            tx /= tn
            ty /= tn
            tz /= tn
        u_max = flow_params[0]
        r_ch = flow_params[1]
        prof = 1.0 - (d / r_ch) ** 2
        if prof < 0.0:
            prof = 0.0
        u = u_max * prof
        return u * tx, u * ty, u * tz
    return 0.0, 0.0, 0.0


@njit(cache=True)
def _seg_seg_closest(p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z):
    """Closest points between two segments; returns (s, t, dist)."""
    d1x = q1x - p1x
    d1y = q1y - p1y
    d1z = q1z - p1z
    d2x = q2x - p2x
    d2y = q2y - p2y
    d2z = q2z - p2z
    rx = p1x - p2x
    ry = p1y - p2y
    rz = p1z - p2z
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    s = 0.0
    t = 0.0
    if a <= 1e-30 and e <= 1e-30:
        s = 0.0
        t = 0.0
    elif a <= 1e-30:
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= 1e-30:
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > 1e-30:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    cx = p1x + s * d1x - (p2x + t * d2x)
    cy = p1y + s * d1y - (p2y + t * d2y)
    cz = p1z + s * d1z - (p2z + t * d2z)
    return s, t, math.sqrt(cx * cx + cy * cy + cz * cz)


@njit(cache=True)
def simulate_batch(
    x, v, fixed,
    mass, node_vol,
    seg_l0, seg_EA,
    node_EI, node_vor,
    clamp_on, clamp_dir, clamp_EI, clamp_vor,
    bead_node, bead_m, bead_dir, rest_tan,
    ct, cn, drag_r, body_r, mu_visc,
    ext_f,
    grav, rho_f, gravity_on, buoyancy_on,
    k_c, mu_f, self_contact,
    prim_kind, prim_params, poly_pts, poly_off, program, hints, normal_cache,
    flow_kind, flow_params, flow_poly,
    magnet_on, mag_moment, mag_rmin, mag_pos, mag_axis,
    cargo_x, cargo_v, cargo_r, cargo_m, cargo_pinned, cargo_plane_z,
    dt, damping_extra,
    step0, n_steps, record_stride,
    out_t, out_x, out_v, out_magpos, out_magaxis, out_cx, out_cv,
    rec_start,
):
    n = x.shape[0]
    nseg = n - 1
    nb = bead_node.shape[0]
    nc = cargo_x.shape[0]
    have_scene = program.shape[0] > 0

    f = np.empty((n, 3))
    gam = np.empty((n, 3, 3))
    edges = np.empty((nseg, 3))
    elen = np.empty(nseg)
    cforce = np.empty((nc, 3))
    sdf_stack = np.empty(16)
    c_stick = k_c * 1e-3

    rec = rec_start
    for k in range(n_steps):
        gstep = step0 + k
        for i in range(n):
            f[i, 0] = 0.0
            f[i, 1] = 0.0
            f[i, 2] = 0.0
            for a in range(3):
                for b in range(3):
                    gam[i, a, b] = 0.0
        for i in range(nc):
            cforce[i, 0] = 0.0
            cforce[i, 1] = 0.0
            cforce[i, 2] = 0.0

        # --- edges, stretch ---------------------------------------------------
        for j in range(nseg):
            ex = x[j + 1, 0] - x[j, 0]
            ey = x[j + 1, 1] - x[j, 1]
            ez = x[j + 1, 2] - x[j, 2]
            l = math.sqrt(ex * ex + ey * ey + ez * ez)
            if l < 1e-12:
                return 1, gstep, rec
            edges[j, 0] = ex
            edges[j, 1] = ey
            edges[j, 2] = ez
            elen[j] = l
            tension = seg_EA[j] * (l / seg_l0[j] - 1.0)
            s = tension / l
            f[j, 0] += s * ex
            f[j, 1] += s * ey
            f[j, 2] += s * ez
            f[j + 1, 0] -= s * ex
            f[j + 1, 1] -= s * ey
            f[j + 1, 2] -= s * ez

        # --- bending (interior turning angles) --------------------------------
        for i in range(1, n - 1):
            e1x = edges[i - 1, 0]
            e1y = edges[i - 1, 1]
            e1z = edges[i - 1, 2]
            e2x = edges[i, 0]
            e2y = edges[i, 1]
            e2z = edges[i, 2]
            l1 = elen[i - 1]
            l2 = elen[i]
            chi = l1 * l2 + e1x * e2x + e1y * e2y + e1z * e2z
            floor_chi = 1e-12 * l1 * l2
            if chi < floor_chi:
                chi = floor_chi
            kbx = 2.0 * (e1y * e2z - e1z * e2y) / chi
            kby = 2.0 * (e1z * e2x - e1x * e2z) / chi
            kbz = 2.0 * (e1x * e2y - e1y * e2x) / chi
            coef = node_EI[i] / node_vor[i]
            wx = coef * kbx
            wy = coef * kby
            wz = coef * kbz
            kb_dot_w = kbx * wx + kby * wy + kbz * wz
            r12 = l2 / l1
            r21 = l1 / l2
            d1x = r12 * e1x + e2x
            d1y = r12 * e1y + e2y
            d1z = r12 * e1z + e2z
            d2x = r21 * e2x + e1x
            d2y = r21 * e2y + e1y
            d2z = r21 * e2z + e1z
            # g_e1 = (2 e2 x w - (kb.w) dchi/de1) / chi ; g_e2 likewise with w x e1
            g1x = (2.0 * (e2y * wz - e2z * wy) - kb_dot_w * d1x) / chi
            g1y = (2.0 * (e2z * wx - e2x * wz) - kb_dot_w * d1y) / chi
            g1z = (2.0 * (e2x * wy - e2y * wx) - kb_dot_w * d1z) / chi
            g2x = (2.0 * (wy * e1z - wz * e1y) - kb_dot_w * d2x) / chi
            g2y = (2.0 * (wz * e1x - wx * e1z) - kb_dot_w * d2y) / chi
            g2z = (2.0 * (wx * e1y - wy * e1x) - kb_dot_w * d2z) / chi
            f[i - 1, 0] += g1x
            f[i - 1, 1] += g1y
            f[i - 1, 2] += g1z
            f[i, 0] += g2x - g1x
            f[i, 1] += g2y - g1y
            f[i, 2] += g2z - g1z
            f[i + 1, 0] -= g2x
            f[i + 1, 1] -= g2y
            f[i + 1, 2] -= g2z

        # --- clamp element at node 0 (virtual incoming edge) -------------------
        if clamp_on == 1:
            e1x = clamp_dir[0] * seg_l0[0]
            e1y = clamp_dir[1] * seg_l0[0]
            e1z = clamp_dir[2] * seg_l0[0]
            l1 = seg_l0[0]
            e2x = edges[0, 0]
            e2y = edges[0, 1]
            e2z = edges[0, 2]
            l2 = elen[0]
            chi = l1 * l2 + e1x * e2x + e1y * e2y + e1z * e2z
            floor_chi = 1e-12 * l1 * l2
            if chi < floor_chi:
                chi = floor_chi
            kbx = 2.0 * (e1y * e2z - e1z * e2y) / chi
            kby = 2.0 * (e1z * e2x - e1x * e2z) / chi
            kbz = 2.0 * (e1x * e2y - e1y * e2x) / chi
            coef = clamp_EI / clamp_vor
            wx = coef * kbx
            wy = coef * kby
            wz = coef * kbz
            kb_dot_w = kbx * wx + kby * wy + kbz * wz
            r21 = l1 / l2
            d2x = r21 * e2x + e1x
            d2y = r21 * e2y + e1y
            d2z = r21 * e2z + e1z
            g2x = (2.0 * (wy * e1z - wz * e1y) - kb_dot_w * d2x) / chi
            g2y = (2.0 * (wz * e1x - wx * e1z) - kb_dot_w * d2y) / chi
            g2z = (2.0 * (wx * e1y - wy * e1x) - kb_dot_w * d2z) / chi
            f[0, 0] += g2x
            f[0, 1] += g2y
            f[0, 2] += g2z
            f[1, 0] -= g2x
            f[1, 1] -= g2y
            f[1, 2] -= g2z

        # --- bead dipoles in the magnet field ----------------------------------
        if magnet_on == 1 and nb > 0:
            mgx = mag_pos[k, 0]
            mgy = mag_pos[k, 1]
            mgz = mag_pos[k, 2]
            Mx = mag_moment * mag_axis[k, 0]
            My = mag_moment * mag_axis[k, 1]
            Mz = mag_moment * mag_axis[k, 2]
            for bi in range(nb):
                i = bead_node[bi]
                ia = i - 1 if i > 0 else 0
                ib = i + 1 if i < n - 1 else n - 1
                tx = x[ib, 0] - x[ia, 0]
                ty = x[ib, 1] - x[ia, 1]
                tz = x[ib, 2] - x[ia, 2]
                tn = math.sqrt(tx * tx + ty * ty + tz * tz)
                if tn < 1e-15:
                    return 1, gstep, rec
                tx /= tn
                ty /= tn
                tz /= tn
                rtx = rest_tan[i, 0]
                rty = rest_tan[i, 1]
                rtz = rest_tan[i, 2]
                c = rtx * tx + rty * ty + rtz * tz
                dx = bead_dir[bi, 0]
                dy = bead_dir[bi, 1]
                dz = bead_dir[bi, 2]
                if c < -1.0 + 1e-9:
                    dwx, dwy, dwz = -dx, -dy, -dz
                else:
                    vx = rty * tz - rtz * ty
                    vy = rtz * tx - rtx * tz
                    vz = rtx * ty - rty * tx
                    vdotd = vx * dx + vy * dy + vz * dz
                    s = vdotd / (1.0 + c)
                    dwx = dx * c + (vy * dz - vz * dy) + vx * s
                    dwy = dy * c + (vz * dx - vx * dz) + vy * s
                    dwz = dz * c + (vx * dy - vy * dx) + vz * s
                mx = bead_m[bi] * dwx
                my = bead_m[bi] * dwy
                mz = bead_m[bi] * dwz
                rx = x[i, 0] - mgx
                ry = x[i, 1] - mgy
                rz = x[i, 2] - mgz
                dist = math.sqrt(rx * rx + ry * ry + rz * rz)
                if dist < 1e-9:
                    return 2, gstep, rec
                # the point-dipole diverges inside the space the real magnet body
                # occupies; clamp the evaluation distance to its physical extent
                if dist < mag_rmin:
                    dist = mag_rmin
                nxh = rx / dist
                nyh = ry / dist
                nzh = rz / dist
                Mdotn = Mx * nxh + My * nyh + Mz * nzh
                inv3 = 1.0 / (dist * dist * dist)
                Bx = K_DIPOLE * (3.0 * nxh * Mdotn - Mx) * inv3
                By = K_DIPOLE * (3.0 * nyh * Mdotn - My) * inv3
                Bz = K_DIPOLE * (3.0 * nzh * Mdotn - Mz) * inv3
                cgrad = 3.0 * K_DIPOLE / (dist * dist * dist * dist)
                Mdotm = Mx * mx + My * my + Mz * mz
                ndotm = nxh * mx + nyh * my + nzh * mz
                Fx = cgrad * (Mdotn * mx + Mdotm * nxh + ndotm * Mx - 5.0 * Mdotn * ndotm * nxh)
                Fy = cgrad * (Mdotn * my + Mdotm * nyh + ndotm * My - 5.0 * Mdotn * ndotm * nyh)
                Fz = cgrad * (Mdotn * mz + Mdotm * nzh + ndotm * Mz - 5.0 * Mdotn * ndotm * nzh)
                f[i, 0] += Fx
                f[i, 1] += Fy
                f[i, 2] += Fz
                # torque m x B realized as a force couple on the adjacent node pair;
                # terminal dipoles (the big head) are force-only: their field-tracking
                # rotation is relieved by twist about the end of the rod, which a
                # torsion-free rod cannot transmit as bending
                if i == 0 or i == n - 1:
                    continue
                tqx = my * Bz - mz * By
                tqy = mz * Bx - mx * Bz
                tqz = mx * By - my * Bx
                ddx = x[ib, 0] - x[ia, 0]
                ddy = x[ib, 1] - x[ia, 1]
                ddz = x[ib, 2] - x[ia, 2]
                dd2 = ddx * ddx + ddy * ddy + ddz * ddz
                if dd2 > 1e-30 and ib != ia:
                    fcx = (tqy * ddz - tqz * ddy) / dd2
                    fcy = (tqz * ddx - tqx * ddz) / dd2
                    fcz = (tqx * ddy - tqy * ddx) / dd2
                    f[ib, 0] += fcx
                    f[ib, 1] += fcy
                    f[ib, 2] += fcz
                    f[ia, 0] -= fcx
                    f[ia, 1] -= fcy
                    f[ia, 2] -= fcz

        # --- constant external node forces --------------------------------------
        for i in range(n):
            f[i, 0] += ext_f[i, 0]
            f[i, 1] += ext_f[i, 1]
            f[i, 2] += ext_f[i, 2]

        # --- gravity minus buoyancy -------------------------------------------
        if gravity_on == 1:
            for i in range(n):
                mb = mass[i]
                if buoyancy_on == 1:
                    mb -= rho_f * node_vol[i]
                f[i, 0] += mb * grav[0]
                f[i, 1] += mb * grav[1]
                f[i, 2] += mb * grav[2]

        # --- wall contact -------------------------------------------------------
        refresh_normals = (gstep % NORMAL_REFRESH == 0)
        if have_scene:
            for i in range(n):
                d = _sdf_value_st(x[i, 0], x[i, 1], x[i, 2], prim_kind, prim_params,
                               poly_pts, poly_off, program, hints[i], sdf_stack)
                if d < 4.0 * body_r[i]:
                    if refresh_normals or not math.isfinite(normal_cache[i, 0]):
                        dd, nxh, nyh, nzh = _sdf_dist_normal_st(x[i, 0], x[i, 1], x[i, 2],
                                                       prim_kind, prim_params,
                                                       poly_pts, poly_off, program, hints[i], sdf_stack)
                        normal_cache[i, 0] = nxh
                        normal_cache[i, 1] = nyh
                        normal_cache[i, 2] = nzh
                    nxh = normal_cache[i, 0]
                    nyh = normal_cache[i, 1]
                    nzh = normal_cache[i, 2]
                    pen = body_r[i] - d
                    if pen > 0.0:
                        fn = k_c * pen
                        f[i, 0] += fn * nxh
                        f[i, 1] += fn * nyh
                        f[i, 2] += fn * nzh
                        vdotn = v[i, 0] * nxh + v[i, 1] * nyh + v[i, 2] * nzh
                        vtx = v[i, 0] - vdotn * nxh
                        vty = v[i, 1] - vdotn * nyh
                        vtz = v[i, 2] - vdotn * nzh
                        st = math.sqrt(vtx * vtx + vty * vty + vtz * vtz)
                        if st > 1e-12:
                            fmag = mu_f * fn
                            cap = c_stick * st
                            if cap < fmag:
                                fmag = cap
                            f[i, 0] -= fmag * vtx / st
                            f[i, 1] -= fmag * vty / st
                            f[i, 2] -= fmag * vtz / st

        # --- rod self-contact ---------------------------------------------------
        if self_contact == 1:
            for i in range(nseg):
                for j in range(i + 2, nseg):
                    mx1 = 0.5 * (x[i, 0] + x[i + 1, 0]) - 0.5 * (x[j, 0] + x[j + 1, 0])
                    my1 = 0.5 * (x[i, 1] + x[i + 1, 1]) - 0.5 * (x[j, 1] + x[j + 1, 1])
                    mz1 = 0.5 * (x[i, 2] + x[i + 1, 2]) - 0.5 * (x[j, 2] + x[j + 1, 2])
                    ri = body_r[i] if body_r[i] > body_r[i + 1] else body_r[i + 1]
                    rj = body_r[j] if body_r[j] > body_r[j + 1] else body_r[j + 1]
                    reach = 0.5 * (elen[i] + elen[j]) + ri + rj
                    if mx1 * mx1 + my1 * my1 + mz1 * mz1 > reach * reach:
                        continue
                    s, t, dist = _seg_seg_closest(
                        x[i, 0], x[i, 1], x[i, 2], x[i + 1, 0], x[i + 1, 1], x[i + 1, 2],
                        x[j, 0], x[j, 1], x[j, 2], x[j + 1, 0], x[j + 1, 1], x[j + 1, 2])
                    pen = ri + rj - dist
                    if pen > 0.0 and dist > 1e-12:
                        c1x = x[i, 0] + s * (x[i + 1, 0] - x[i, 0])
                        c1y = x[i, 1] + s * (x[i + 1, 1] - x[i, 1])
                        c1z = x[i, 2] + s * (x[i + 1, 2] - x[i, 2])
                        c2x = x[j, 0] + t * (x[j + 1, 0] - x[j, 0])
                        c2y = x[j, 1] + t * (x[j + 1, 1] - x[j, 1])
                        c2z = x[j, 2] + t * (x[j + 1, 2] - x[j, 2])
                        nxh = (c1x - c2x) / dist
                        nyh = (c1y - c2y) / dist
                        nzh = (c1z - c2z) / dist
                        fn = k_c * pen
                        f[i, 0] += fn * nxh * (1.0 - s)
                        f[i, 1] += fn * nyh * (1.0 - s)
                        f[i, 2] += fn * nzh * (1.0 - s)
                        f[i + 1, 0] += fn * nxh * s
                        f[i + 1, 1] += fn * nyh * s
                        f[i + 1, 2] += fn * nzh * s
                        f[j, 0] -= fn * nxh * (1.0 - t)
                        f[j, 1] -= fn * nyh * (1.0 - t)
                        f[j, 2] -= fn * nzh * (1.0 - t)
                        f[j + 1, 0] -= fn * nxh * t
                        f[j + 1, 1] -= fn * nyh * t
                        f[j + 1, 2] -= fn * nzh * t

        # --- cargo --------------------------------------------------------------
        for ci in range(nc):
            if gravity_on == 1:
                mb = cargo_m[ci]
                if buoyancy_on == 1:
                    mb -= rho_f * (4.0 / 3.0) * math.pi * cargo_r[ci] ** 3
                cforce[ci, 0] += mb * grav[0]
                cforce[ci, 1] += mb * grav[1]
                cforce[ci, 2] += mb * grav[2]
            if have_scene:
                d = _sdf_value_st(cargo_x[ci, 0], cargo_x[ci, 1], cargo_x[ci, 2],
                                  prim_kind, prim_params, poly_pts, poly_off, program,
                                  hints[n + ci], sdf_stack)
                if refresh_normals or not math.isfinite(normal_cache[n + ci, 0]):
                    dd, nxh, nyh, nzh = _sdf_dist_normal_st(cargo_x[ci, 0], cargo_x[ci, 1],
                                                   cargo_x[ci, 2], prim_kind, prim_params,
                                                   poly_pts, poly_off, program, hints[n + ci], sdf_stack)
                    normal_cache[n + ci, 0] = nxh
                    normal_cache[n + ci, 1] = nyh
                    normal_cache[n + ci, 2] = nzh
                nxh = normal_cache[n + ci, 0]
                nyh = normal_cache[n + ci, 1]
                nzh = normal_cache[n + ci, 2]
                pen = cargo_r[ci] - d
                if pen > 0.0:
                    fn = k_c * pen
                    cforce[ci, 0] += fn * nxh
                    cforce[ci, 1] += fn * nyh
                    cforce[ci, 2] += fn * nzh
                    vdotn = (cargo_v[ci, 0] * nxh + cargo_v[ci, 1] * nyh + cargo_v[ci, 2] * nzh)
                    vtx = cargo_v[ci, 0] - vdotn * nxh
                    vty = cargo_v[ci, 1] - vdotn * nyh
                    vtz = cargo_v[ci, 2] - vdotn * nzh
                    st = math.sqrt(vtx * vtx + vty * vty + vtz * vtz)
                    if st > 1e-12:
                        fmag = mu_f * fn
                        cap = c_stick * st
                        if cap < fmag:
                            fmag = cap
                        cforce[ci, 0] -= fmag * vtx / st
                        cforce[ci, 1] -= fmag * vty / st
                        cforce[ci, 2] -= fmag * vtz / st
            # rod nodes against the cargo sphere
            for i in range(n):
                rx = x[i, 0] - cargo_x[ci, 0]
                ry = x[i, 1] - cargo_x[ci, 1]
                rz = x[i, 2] - cargo_x[ci, 2]
                dist = math.sqrt(rx * rx + ry * ry + rz * rz)
                pen = body_r[i] + cargo_r[ci] - dist
                if pen > 0.0 and dist > 1e-12:
                    fn = k_c * pen / dist
                    f[i, 0] += fn * rx
                    f[i, 1] += fn * ry
                    f[i, 2] += fn * rz
                    cforce[ci, 0] -= fn * rx
                    cforce[ci, 1] -= fn * ry
                    cforce[ci, 2] -= fn * rz

        # --- drag operators -----------------------------------------------------
        for j in range(nseg):
            txh = edges[j, 0] / elen[j]
            tyh = edges[j, 1] / elen[j]
            tzh = edges[j, 2] / elen[j]
            half = 0.5 * seg_l0[j]
            ctn = half * (ct - cn)
            diag = half * cn
            gxx = diag + ctn * txh * txh
            gyy = diag + ctn * tyh * tyh
            gzz = diag + ctn * tzh * tzh
            gxy = ctn * txh * tyh
            gxz = ctn * txh * tzh
            gyz = ctn * tyh * tzh
            gam[j, 0, 0] += gxx
            gam[j, 1, 1] += gyy
            gam[j, 2, 2] += gzz
            gam[j, 0, 1] += gxy
            gam[j, 1, 0] += gxy
            gam[j, 0, 2] += gxz
            gam[j, 2, 0] += gxz
            gam[j, 1, 2] += gyz
            gam[j, 2, 1] += gyz
            gam[j + 1, 0, 0] += gxx
            gam[j + 1, 1, 1] += gyy
            gam[j + 1, 2, 2] += gzz
            gam[j + 1, 0, 1] += gxy
            gam[j + 1, 1, 0] += gxy
            gam[j + 1, 0, 2] += gxz
            gam[j + 1, 2, 0] += gxz
            gam[j + 1, 1, 2] += gyz
            gam[j + 1, 2, 1] += gyz
        for i in range(n):
            if drag_r[i] > 0.0:
                gs = 6.0 * math.pi * mu_visc * drag_r[i]
                gam[i, 0, 0] += gs
                gam[i, 1, 1] += gs
                gam[i, 2, 2] += gs

        # --- integrate nodes (drag implicit) -------------------------------------
        for i in range(n):
            if fixed[i] == 1:
                v[i, 0] = 0.0
                v[i, 1] = 0.0
                v[i, 2] = 0.0
                continue
            ux, uy, uz = flow_at(x[i, 0], x[i, 1], x[i, 2], flow_kind, flow_params,
                                 poly_pts, poly_off, flow_poly, hints[i])
            m = mass[i]
            bx = m * v[i, 0] + dt * (f[i, 0] + gam[i, 0, 0] * ux + gam[i, 0, 1] * uy + gam[i, 0, 2] * uz)
            by = m * v[i, 1] + dt * (f[i, 1] + gam[i, 1, 0] * ux + gam[i, 1, 1] * uy + gam[i, 1, 2] * uz)
            bz = m * v[i, 2] + dt * (f[i, 2] + gam[i, 2, 0] * ux + gam[i, 2, 1] * uy + gam[i, 2, 2] * uz)
            md = m * (1.0 + dt * damping_extra)
            a00 = md + dt * gam[i, 0, 0]
            a01 = dt * gam[i, 0, 1]
            a02 = dt * gam[i, 0, 2]
            a11 = md + dt * gam[i, 1, 1]
            a12 = dt * gam[i, 1, 2]
            a22 = md + dt * gam[i, 2, 2]
            det = (a00 * (a11 * a22 - a12 * a12)
                   - a01 * (a01 * a22 - a12 * a02)
                   + a02 * (a01 * a12 - a11 * a02))
            i00 = (a11 * a22 - a12 * a12) / det
            i01 = (a02 * a12 - a01 * a22) / det
            i02 = (a01 * a12 - a02 * a11) / det
            i11 = (a00 * a22 - a02 * a02) / det
            i12 = (a02 * a01 - a00 * a12) / det
            i22 = (a00 * a11 - a01 * a01) / det
            vx = i00 * bx + i01 * by + i02 * bz
            vy = i01 * bx + i11 * by + i12 * bz
            vz = i02 * bx + i12 * by + i22 * bz
            if not (math.isfinite(vx) and math.isfinite(vy) and math.isfinite(vz)):
                return 2, gstep, rec
            if vx * vx + vy * vy + vz * vz > VEL_LIMIT * VEL_LIMIT:
                return 3, gstep, rec
            v[i, 0] = vx
            v[i, 1] = vy
            v[i, 2] = vz
            x[i, 0] += dt * vx
            x[i, 1] += dt * vy
            x[i, 2] += dt * vz

        # --- integrate cargo ------------------------------------------------------
        for ci in range(nc):
            ux, uy, uz = flow_at(cargo_x[ci, 0], cargo_x[ci, 1], cargo_x[ci, 2],
                                 flow_kind, flow_params, poly_pts, poly_off, flow_poly, hints[n + ci])
            gs = 6.0 * math.pi * mu_visc * cargo_r[ci]
            denom = cargo_m[ci] + dt * gs
            vx = (cargo_m[ci] * cargo_v[ci, 0] + dt * (cforce[ci, 0] + gs * ux)) / denom
            vy = (cargo_m[ci] * cargo_v[ci, 1] + dt * (cforce[ci, 1] + gs * uy)) / denom
            vz = (cargo_m[ci] * cargo_v[ci, 2] + dt * (cforce[ci, 2] + gs * uz)) / denom
            if not (math.isfinite(vx) and math.isfinite(vy) and math.isfinite(vz)):
                return 2, gstep, rec
            if cargo_pinned == 1:
                vz = 0.0
            cargo_v[ci, 0] = vx
            cargo_v[ci, 1] = vy
            cargo_v[ci, 2] = vz
            cargo_x[ci, 0] += dt * vx
            cargo_x[ci, 1] += dt * vy
            cargo_x[ci, 2] += dt * vz
            if cargo_pinned == 1:
                cargo_x[ci, 2] = cargo_plane_z

        # --- record ---------------------------------------------------------------
        done = gstep + 1
        if record_stride > 0 and done % record_stride == 0:
            out_t[rec] = done * dt
            for i in range(n):
                out_x[rec, i, 0] = x[i, 0]
                out_x[rec, i, 1] = x[i, 1]
                out_x[rec, i, 2] = x[i, 2]
                out_v[rec, i, 0] = v[i, 0]
                out_v[rec, i, 1] = v[i, 1]
                out_v[rec, i, 2] = v[i, 2]
            out_magpos[rec, 0] = mag_pos[k, 0]
            out_magpos[rec, 1] = mag_pos[k, 1]
            out_magpos[rec, 2] = mag_pos[k, 2]
            out_magaxis[rec, 0] = mag_axis[k, 0]
            out_magaxis[rec, 1] = mag_axis[k, 1]
            out_magaxis[rec, 2] = mag_axis[k, 2]
            for ci in range(nc):
                out_cx[rec, ci, 0] = cargo_x[ci, 0]
                out_cx[rec, ci, 1] = cargo_x[ci, 1]
                out_cx[rec, ci, 2] = cargo_x[ci, 2]
                out_cv[rec, ci, 0] = cargo_v[ci, 0]
                out_cv[rec, ci, 1] = cargo_v[ci, 1]
                out_cv[rec, ci, 2] = cargo_v[ci, 2]
            rec += 1

    return 0, step0 + n_steps, rec
