# cython: language_level=3
"""Compiled kernel implementations.

Mirrors ``velofuse._purepy`` function for function; the scalar recurrences
follow the same operation order so results match the fallback to the last
ulp.  See the fallback module for the full contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor

cnp.import_array()


def fuse_maps(d1, r1, p1, d2, r2, p2):
    cdef double[:, ::1] D1 = np.ascontiguousarray(d1, dtype=np.float64)
    cdef double[:, ::1] R1 = np.ascontiguousarray(r1, dtype=np.float64)
    cdef unsigned char[:, ::1] P1 = np.ascontiguousarray(p1, dtype=np.uint8)
    cdef double[:, ::1] D2 = np.ascontiguousarray(d2, dtype=np.float64)
    cdef double[:, ::1] R2 = np.ascontiguousarray(r2, dtype=np.float64)
    cdef unsigned char[:, ::1] P2 = np.ascontiguousarray(p2, dtype=np.uint8)
    cdef Py_ssize_t ny = D1.shape[0], nx = D1.shape[1], y, x

    out_d = np.zeros((ny, nx), dtype=np.float64)
    out_r = np.zeros((ny, nx), dtype=np.float64)
    out_p = np.zeros((ny, nx), dtype=np.uint8)
    out_prov = np.zeros((ny, nx), dtype=np.uint8)
    cdef double[:, ::1] OD = out_d
    cdef double[:, ::1] OR = out_r
    cdef unsigned char[:, ::1] OP = out_p
    cdef unsigned char[:, ::1] OV = out_prov

    for y in range(ny):
        for x in range(nx):
            if P1[y, x] and P2[y, x]:
                if R1[y, x] > R2[y, x]:
                    OD[y, x] = D1[y, x]; OR[y, x] = R1[y, x]; OV[y, x] = 1
                else:
                    OD[y, x] = D2[y, x]; OR[y, x] = R2[y, x]; OV[y, x] = 2
                OP[y, x] = 1
            elif P1[y, x]:
                OD[y, x] = D1[y, x]; OR[y, x] = R1[y, x]; OV[y, x] = 1
                OP[y, x] = 1
            elif P2[y, x]:
                OD[y, x] = D2[y, x]; OR[y, x] = R2[y, x]; OV[y, x] = 2
                OP[y, x] = 1
    return out_d, out_r, out_p.view(np.bool_), out_prov


def depth_stats(disp, present, Py_ssize_t x0, Py_ssize_t y0, Py_ssize_t w,
                Py_ssize_t h, double stereo_constant, double bin_width):
    cdef double[:, ::1] D = np.ascontiguousarray(disp, dtype=np.float64)
    cdef unsigned char[:, ::1] P = np.ascontiguousarray(present, dtype=np.uint8)
    dist_arr = np.empty(w * h, dtype=np.float64)
    bins_arr = np.empty(w * h, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] bins = bins_arr
    cdef Py_ssize_t k = 0, yy, xx
    cdef double dd

    for yy in range(y0, y0 + h):
        for xx in range(x0, x0 + w):
            if P[yy, xx]:
                dd = stereo_constant / D[yy, xx]
                dist[k] = dd
                bins[k] = <long long>floor(dd / bin_width)
                k += 1
    if k == 0:
        return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), 0,
                float("nan"))
    dist_arr = dist_arr[:k]
    bins_arr = bins_arr[:k]
    uniq, counts = np.unique(bins_arr, return_counts=True)
    mode = uniq[int(np.argmax(counts))]
    near = np.abs(bins_arr - mode) <= 1
    d_est = float(dist_arr[near].mean())
    return uniq, counts.astype(np.int64), int(k), d_est


def filter_trace(d, double dt, params):
    cdef double normalizer = params[0]
    cdef double bias_gain = params[1]
    cdef double accel_gain = params[2]
    cdef double gain_limit = params[3]
    cdef double monitor_threshold = params[4]
    cdef double reject_ratio = params[5]
    cdef double monitor_gain_limit = params[6]
    cdef double gv_scale = params[7]
    cdef double denom_epsilon = params[8]

    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], i
    nan = float("nan")
    v_raw = np.full(n, nan); vs = np.full(n, nan); vn = np.full(n, nan)
    an = np.full(n, nan); as_raw = np.full(n, nan); am_raw = np.full(n, nan)
    s_gain = np.full(n, nan); sm_gain = np.full(n, nan); gv = np.full(n, nan)
    rejected = np.zeros(n, dtype=np.uint8)
    has_output = np.zeros(n, dtype=np.uint8)
    cdef double[::1] V = v_raw, VS = vs, VN = vn, AN = an
    cdef double[::1] AS = as_raw, AM = am_raw, SG = s_gain, SM = sm_gain, GV = gv
    cdef unsigned char[::1] REJ = rejected, HAS = has_output

    cdef double last_d = 0.0, vs_p = 0.0, vn_p = 0.0, an_p = 0.0
    cdef double di, dt_eff, v, a_s, a_m, biased, den_s, den_m, s, sm
    cdef double vs_t, vn_t, an_t, gv_t
    cdef Py_ssize_t last_i = -1
    cdef bint seeded = False, rej

    for i in range(n):
        di = dv[i]
        if di != di:
            continue
        if last_i < 0:
            last_d = di
            last_i = i
            continue
        dt_eff = (i - last_i) * dt
        v = (di - last_d) / dt_eff
        if not seeded:
            vs_p = v; vn_p = v; an_p = 0.0
            seeded = True
            V[i] = v; VS[i] = v; VN[i] = v; AN[i] = 0.0
            HAS[i] = 1
        else:
            a_s = (v - vs_p) / dt_eff
            a_m = (v - vn_p) / dt_eff
            biased = an_p * bias_gain
            den_s = fabs(biased - a_s)
            if den_s < denom_epsilon:
                den_s = denom_epsilon
            s = normalizer / den_s
            if s > gain_limit:
                s = gain_limit
            den_m = fabs(biased - a_m)
            if den_m < denom_epsilon:
                den_m = denom_epsilon
            sm = normalizer / den_m
            rej = False
            if s < monitor_threshold and s < sm * reject_ratio:
                s = sm if sm < monitor_gain_limit else monitor_gain_limit
                rej = True
            vs_t = vs_p + s * (v - vs_p)
            gv_t = 1.0 / (di / gv_scale + 1.0)
            vn_t = vn_p + gv_t * (v - vn_p)
            an_t = an_p + accel_gain * ((vs_t - vs_p) / dt_eff - an_p)
            V[i] = v; VS[i] = vs_t; VN[i] = vn_t; AN[i] = an_t
            AS[i] = a_s; AM[i] = a_m; SG[i] = s; SM[i] = sm; GV[i] = gv_t
            REJ[i] = rej
            HAS[i] = 1
            vs_p = vs_t; vn_p = vn_t; an_p = an_t
        last_d = di
        last_i = i

    return {
        "v_raw": v_raw, "vs": vs, "vn": vn, "an": an,
        "as_raw": as_raw, "am_raw": am_raw, "s_gain": s_gain,
        "sm_gain": sm_gain, "gv": gv, "rejected": rejected,
        "has_output": has_output,
    }


def kalman_trace(z, double dt, double q, double r_fixed, double r_disp_sigma,
                 double stereo_constant, p0):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    nan = float("nan")
    d_est = np.full(n, nan); v_est = np.full(n, nan); a_est = np.full(n, nan)
    innov = np.full(n, nan); innov_var = np.full(n, nan)
    has_output = np.zeros(n, dtype=np.uint8)
    cdef double[::1] DE = d_est, VE = v_est, AE = a_est, IN = innov, IV = innov_var
    cdef unsigned char[::1] HAS = has_output

    cdef double half = 0.5 * dt * dt
    cdef double qq = q * q
    cdef double q00 = qq * half * half, q01 = qq * half * dt, q02 = qq * half
    cdef double q11 = qq * dt * dt, q12 = qq * dt, q22 = qq

    cdef double last_z = 0.0
    cdef Py_ssize_t last_i = -1
    cdef bint inited = False, valid
    cdef double x0 = 0.0, x1 = 0.0, x2 = 0.0
    cdef double p00 = 0.0, p01 = 0.0, p02 = 0.0, p11 = 0.0, p12 = 0.0, p22 = 0.0
    cdef double zi, m00, m01, m02, m11, m12, n00, n01, n02, n11, n12, n22
    cdef double sigma, r, s, y, k0, k1, k2, c0
    cdef double b00, b01, b02, b10, b11, b12, b20, b22
    cdef double ip0 = p0[0], ip1 = p0[1], ip2 = p0[2]

    for i in range(n):
        zi = zv[i]
        valid = zi == zi
        if not inited:
            if not valid:
                continue
            if last_i < 0:
                last_z = zi
                last_i = i
                continue
            x0 = zi
            x1 = (zi - last_z) / ((i - last_i) * dt)
            x2 = 0.0
            p00 = ip0; p11 = ip1; p22 = ip2
            p01 = 0.0; p02 = 0.0; p12 = 0.0
            inited = True
            DE[i] = x0; VE[i] = x1; AE[i] = x2
            HAS[i] = 1
            continue

        x0 = x0 + dt * x1 + half * x2
        x1 = x1 + dt * x2
        m00 = p00 + dt * p01 + half * p02
        m01 = p01 + dt * p11 + half * p12
        m02 = p02 + dt * p12 + half * p22
        m11 = p11 + dt * p12
        m12 = p12 + dt * p22
        n00 = m00 + dt * m01 + half * m02
        n01 = m01 + dt * m02
        n02 = m02
        n11 = m11 + dt * m12
        n12 = m12
        n22 = p22
        p00 = n00 + q00
        p01 = n01 + q01
        p02 = n02 + q02
        p11 = n11 + q11
        p12 = n12 + q12
        p22 = n22 + q22

        if valid:
            if r_disp_sigma > 0.0:
                sigma = zi * zi * r_disp_sigma / stereo_constant
            else:
                sigma = r_fixed
            r = sigma * sigma
            s = p00 + r
            y = zi - x0
            IN[i] = y
            IV[i] = s
            k0 = p00 / s
            k1 = p01 / s
            k2 = p02 / s
            x0 += k0 * y
            x1 += k1 * y
            x2 += k2 * y
            c0 = 1.0 - k0
            b00 = c0 * p00
            b01 = c0 * p01
            b02 = c0 * p02
            b10 = p01 - k1 * p00
            b11 = p11 - k1 * p01
            b12 = p12 - k1 * p02
            b20 = p02 - k2 * p00
            b22 = p22 - k2 * p02
            p00 = b00 * c0 + r * k0 * k0
            p01 = -b00 * k1 + b01 + r * k0 * k1
            p02 = -b00 * k2 + b02 + r * k0 * k2
            p11 = -b10 * k1 + b11 + r * k1 * k1
            p12 = -b10 * k2 + b12 + r * k1 * k2
            p22 = -b20 * k2 + b22 + r * k2 * k2

        DE[i] = x0; VE[i] = x1; AE[i] = x2
        HAS[i] = 1

    return {
        "d": d_est, "v": v_est, "a": a_est, "has_output": has_output,
        "innovation": innov, "innovation_var": innov_var,
    }
