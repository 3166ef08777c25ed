"""Compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from velofuse import _purepy
from velofuse._backend import backend_name
from velofuse.saito import FilterParams

try:
    from velofuse import _core
except ImportError:
    _core = None

needs_both = pytest.mark.skipif(
    _core is None, reason="compiled extension not built on this install"
)


def _random_distance_series(rng, n=400):
    d = 30_000.0 + np.cumsum(rng.normal(0.0, 120.0, size=n))
    d[rng.random(n) < 0.15] = np.nan
    d[0] = np.nan  # exercise the leading-gap path
    return d


@needs_both
def test_filter_trace_backends_agree():
    rng = np.random.default_rng(101)
    params = FilterParams().as_tuple()
    for _ in range(5):
        d = _random_distance_series(rng)
        a = _core.filter_trace(d, 0.05, params)
        b = _purepy.filter_trace(d, 0.05, params)
        assert set(a) == set(b)
        for key in a:
            x = np.asarray(a[key], dtype=float)
            y = np.asarray(b[key], dtype=float)
            assert np.array_equal(np.isnan(x), np.isnan(y)), key
            assert np.array_equal(x[~np.isnan(x)], y[~np.isnan(y)]), key


@needs_both
def test_kalman_trace_backends_agree():
    rng = np.random.default_rng(55)
    p0 = (1.0e6, 1.0e8, 1.0e7)
    for r_disp in (0.0, 0.05):
        z = _random_distance_series(rng)
        a = _core.kalman_trace(z, 0.05, 2000.0, 300.0, r_disp, 560_000.0, p0)
        b = _purepy.kalman_trace(z, 0.05, 2000.0, 300.0, r_disp, 560_000.0, p0)
        for key in a:
            x = np.asarray(a[key], dtype=float)
            y = np.asarray(b[key], dtype=float)
            assert np.array_equal(np.isnan(x), np.isnan(y)), key
            # sequences of identical float ops, so exact agreement is required
            assert np.array_equal(x[~np.isnan(x)], y[~np.isnan(y)]), key


@needs_both
def test_fuse_maps_backends_agree():
    rng = np.random.default_rng(7)
    shape = (32, 64)
    for _ in range(10):
        d1 = rng.uniform(1.0, 60.0, shape)
        d2 = rng.uniform(1.0, 60.0, shape)
        r1 = rng.uniform(0.0, 1.0, shape)
        r2 = rng.uniform(0.0, 1.0, shape)
        p1 = rng.random(shape) < 0.7
        p2 = rng.random(shape) < 0.7
        out_a = _core.fuse_maps(d1, r1, p1, d2, r2, p2)
        out_b = _purepy.fuse_maps(d1, r1, p1, d2, r2, p2)
        for x, y in zip(out_a, out_b):
            assert np.array_equal(np.asarray(x), np.asarray(y))


@needs_both
def test_depth_stats_backends_agree():
    rng = np.random.default_rng(13)
    shape = (32, 64)
    for _ in range(10):
        disp = rng.uniform(5.0, 60.0, shape)
        present = rng.random(shape) < 0.6
        args = (disp, present, 10, 4, 30, 20, 560_000.0, 1000.0)
        bins_a, counts_a, total_a, d_a = _core.depth_stats(*args)
        bins_b, counts_b, total_b, d_b = _purepy.depth_stats(*args)
        assert np.array_equal(np.asarray(bins_a), np.asarray(bins_b))
        assert np.array_equal(np.asarray(counts_a), np.asarray(counts_b))
        assert total_a == total_b
        if np.isnan(d_b):
            assert np.isnan(d_a)
        else:
            assert d_a == pytest.approx(d_b, abs=1e-9)


def test_backend_name_reports_selection():
    assert backend_name() in ("compiled", "purepy", "purepy (forced)")


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, VELOFUSE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from velofuse._backend import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "purepy (forced)"
