"""Pure-Python / numpy kernel implementations.

This module is the fallback backend selected when the compiled extension
(``velofuse._core``) is unavailable.  Both backends expose the same four
functions with identical array-in/array-out contracts; the test suite pins
them against each other.

Sequential recurrences (the velocity filter and the Kalman baseline) are
written as plain-float loops because they cannot be vectorised across time;
per-cell disparity-map work is vectorised with numpy.
"""

from __future__ import annotations

import math

import numpy as np


def fuse_maps(d1, r1, p1, d2, r2, p2):
    """Merge two disparity grids cell by cell.

    Where both cells are present the higher reliability wins and ties go to
    the second grid.  Returns ``(disparity, reliability, present, provenance)``
    with provenance 0 = absent, 1 = first grid, 2 = second grid.  Adopted
    values are copied bit for bit.
    """
    both = p1 & p2
    take1 = (p1 & ~p2) | (both & (r1 > r2))
    take2 = (p2 & ~p1) | (both & ~(r1 > r2))
    present = p1 | p2
    disparity = np.where(take1, d1, np.where(take2, d2, 0.0))
    reliability = np.where(take1, r1, np.where(take2, r2, 0.0))
    provenance = np.zeros(d1.shape, dtype=np.uint8)
    provenance[take1] = 1
    provenance[take2] = 2
    return disparity, reliability, present, provenance


def depth_stats(disp, present, x0, y0, w, h, stereo_constant, bin_width):
    """Depth-bin votes for the present cells inside a rectangular window.

    Each present cell converts to a distance and votes into
    ``floor(distance / bin_width)``.  Returns ``(bins, counts, total, d_est)``
    where ``bins`` are the populated bin indices in ascending order and
    ``d_est`` is the mean distance of cells within one bin of the modal bin
    (ties on the count go to the smallest bin index), NaN when empty.
    """
    sub_d = disp[y0 : y0 + h, x0 : x0 + w]
    sub_p = present[y0 : y0 + h, x0 : x0 + w]
    dist = stereo_constant / sub_d[sub_p]
    if dist.size == 0:
        return (
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            0,
            math.nan,
        )
    bins = np.floor(dist / bin_width).astype(np.int64)
    uniq, counts = np.unique(bins, return_counts=True)
    mode = uniq[int(np.argmax(counts))]  # first max -> smallest bin index
    near = np.abs(bins - mode) <= 1
    d_est = float(dist[near].mean())
    return uniq, counts.astype(np.int64), int(dist.size), d_est


def filter_trace(d, dt, params):
    """Run the adaptive velocity filter over a distance series.

    ``d`` is a float array with NaN marking frames without a distance.  The
    first valid frame only records the distance, the second seeds the
    velocity states with the raw velocity, and every later valid frame runs
    one filter step using the elapsed time since the previous valid frame.

    ``params`` is the 9-tuple ``(normalizer, bias_gain, accel_gain,
    gain_limit, monitor_threshold, reject_ratio, monitor_gain_limit,
    gv_scale, denom_epsilon)``.

    Returns a dict of per-frame arrays: ``v_raw``, ``vs``, ``vn``, ``an``,
    ``as_raw``, ``am_raw``, ``s_gain``, ``sm_gain``, ``gv``, ``rejected``
    (uint8) and ``has_output`` (uint8).  Frames before the seed and frames
    without a distance hold NaN / 0.
    """
    (
        normalizer,
        bias_gain,
        accel_gain,
        gain_limit,
        monitor_threshold,
        reject_ratio,
        monitor_gain_limit,
        gv_scale,
        denom_epsilon,
    ) = params
    n = len(d)
    nan = math.nan
    v_raw = np.full(n, nan)
    vs = np.full(n, nan)
    vn = np.full(n, nan)
    an = np.full(n, nan)
    as_raw = np.full(n, nan)
    am_raw = np.full(n, nan)
    s_gain = np.full(n, nan)
    sm_gain = np.full(n, nan)
    gv = np.full(n, nan)
    rejected = np.zeros(n, dtype=np.uint8)
    has_output = np.zeros(n, dtype=np.uint8)

    dl = np.asarray(d, dtype=np.float64).tolist()
    last_d = 0.0
    last_i = -1
    seeded = False
    vs_p = vn_p = an_p = 0.0

    for i in range(n):
        di = dl[i]
        if di != di:  # NaN
            continue
        if last_i < 0:
            last_d = di
            last_i = i
            continue
        dt_eff = (i - last_i) * dt
        v = (di - last_d) / dt_eff
        if not seeded:
            vs_p = vn_p = v
            an_p = 0.0
            seeded = True
            v_raw[i] = v
            vs[i] = v
            vn[i] = v
            an[i] = 0.0
            has_output[i] = 1
        else:
            a_s = (v - vs_p) / dt_eff
            a_m = (v - vn_p) / dt_eff
            biased = an_p * bias_gain
            den_s = abs(biased - a_s)
            if den_s < denom_epsilon:
                den_s = denom_epsilon
            s = normalizer / den_s
            if s > gain_limit:
                s = gain_limit
            den_m = abs(biased - a_m)
            if den_m < denom_epsilon:
                den_m = denom_epsilon
            sm = normalizer / den_m
            rej = 0
            if s < monitor_threshold and s < sm * reject_ratio:
                s = sm if sm < monitor_gain_limit else monitor_gain_limit
                rej = 1
            vs_t = vs_p + s * (v - vs_p)
            gv_t = 1.0 / (di / gv_scale + 1.0)
            vn_t = vn_p + gv_t * (v - vn_p)
            an_t = an_p + accel_gain * ((vs_t - vs_p) / dt_eff - an_p)
            v_raw[i] = v
            vs[i] = vs_t
            vn[i] = vn_t
            an[i] = an_t
            as_raw[i] = a_s
            am_raw[i] = a_m
            s_gain[i] = s
            sm_gain[i] = sm
            gv[i] = gv_t
            rejected[i] = rej
            has_output[i] = 1
            vs_p, vn_p, an_p = vs_t, vn_t, an_t
        last_d = di
        last_i = i

    return {
        "v_raw": v_raw,
        "vs": vs,
        "vn": vn,
        "an": an,
        "as_raw": as_raw,
        "am_raw": am_raw,
        "s_gain": s_gain,
        "sm_gain": sm_gain,
        "gv": gv,
        "rejected": rejected,
        "has_output": has_output,
    }


def kalman_trace(z, dt, q, r_fixed, r_disp_sigma, stereo_constant, p0):
    """Run the constant-acceleration Kalman baseline over a distance series.

    ``z`` holds measured distances with NaN for dropped frames.  The filter
    initialises from the first two valid measurements; afterwards every frame
    predicts and valid frames also update (Joseph form, symmetric covariance).

    ``r_fixed`` is the measurement std-dev in mm; when ``r_disp_sigma`` is
    positive the std-dev is distance dependent instead:
    ``z**2 * r_disp_sigma / stereo_constant``.

    Returns a dict of arrays ``d``, ``v``, ``a``, ``has_output`` (uint8),
    ``innovation`` and ``innovation_var`` (NaN on frames without an update).
    """
    n = len(z)
    nan = math.nan
    d_est = np.full(n, nan)
    v_est = np.full(n, nan)
    a_est = np.full(n, nan)
    innov = np.full(n, nan)
    innov_var = np.full(n, nan)
    has_output = np.zeros(n, dtype=np.uint8)

    zl = np.asarray(z, dtype=np.float64).tolist()
    half = 0.5 * dt * dt
    qq = q * q
    q00 = qq * half * half
    q01 = qq * half * dt
    q02 = qq * half
    q11 = qq * dt * dt
    q12 = qq * dt
    q22 = qq

    last_z = 0.0
    last_i = -1
    inited = False
    x0 = x1 = x2 = 0.0
    p00 = p01 = p02 = p11 = p12 = p22 = 0.0

    for i in range(n):
        zi = zl[i]
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
            p00, p11, p22 = p0
            p01 = p02 = p12 = 0.0
            inited = True
            d_est[i] = x0
            v_est[i] = x1
            a_est[i] = x2
            has_output[i] = 1
            continue

        # predict
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
            innov[i] = y
            innov_var[i] = s
            k0 = p00 / s
            k1 = p01 / s
            k2 = p02 / s
            x0 += k0 * y
            x1 += k1 * y
            x2 += k2 * y
            # Joseph form keeps the covariance symmetric and non-negative
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

        d_est[i] = x0
        v_est[i] = x1
        a_est[i] = x2
        has_output[i] = 1

    return {
        "d": d_est,
        "v": v_est,
        "a": a_est,
        "has_output": has_output,
        "innovation": innov,
        "innovation_var": innov_var,
    }
