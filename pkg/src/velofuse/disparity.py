"""Disparity maps from a bright/dark exposure pair: fusion and depth histograms.

A disparity map is a sparse grid: each cell either holds a positive disparity
(pixels) with a non-negative reliability score, or is absent.  Two maps from
different exposures of the same scene are merged cell by cell, keeping the
higher-reliability cell (ties prefer the second, dark-exposure map).  The
depth histogram counts how many cells of a window fall into each depth bin;
its total count is the evidence measure used downstream to rate how
trustworthy the stereo distance is.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from ._backend import impl
from .camera import CameraModel
from .errors import DomainError, UsageError

DEFAULT_BIN_WIDTH = 500.0  # mm

PROV_ABSENT = 0
PROV_FIRST = 1
PROV_SECOND = 2


class Exposure(str, Enum):
    """Which exposure produced a map: T1 (bright), T2 (dark), or a fused result."""

    T1 = "T1"
    T2 = "T2"
    FUSED = "FUSED"


@dataclass
class DisparityMap:
    """Sparse disparity grid for one exposure.

    ``disparity`` and ``reliability`` are (height, width) float arrays whose
    values are meaningful only where ``present`` is True.  ``provenance`` is
    set on fused maps only (0 absent, 1 first input, 2 second input).
    """

    disparity: np.ndarray
    reliability: np.ndarray
    present: np.ndarray
    exposure: Exposure = Exposure.T1
    provenance: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.disparity = np.ascontiguousarray(self.disparity, dtype=np.float64)
        self.reliability = np.ascontiguousarray(self.reliability, dtype=np.float64)
        self.present = np.ascontiguousarray(self.present, dtype=bool)
        if self.disparity.ndim != 2:
            raise UsageError("disparity grid must be 2-D")
        if not (self.disparity.shape == self.reliability.shape == self.present.shape):
            raise UsageError("disparity, reliability and present shapes must match")
        self.exposure = Exposure(self.exposure)
        live_d = self.disparity[self.present]
        if live_d.size and not np.all(np.isfinite(live_d) & (live_d > 0)):
            raise DomainError("present cells must hold finite positive disparities")
        live_r = self.reliability[self.present]
        if live_r.size and not np.all(np.isfinite(live_r) & (live_r >= 0)):
            raise DomainError("present cells must hold finite non-negative reliability")

    @property
    def width(self) -> int:
        return self.disparity.shape[1]

    @property
    def height(self) -> int:
        return self.disparity.shape[0]

    @property
    def cell_count(self) -> int:
        """Number of present cells."""
        return int(self.present.sum())

    @classmethod
    def empty(cls, width: int, height: int, exposure: Exposure = Exposure.T1) -> "DisparityMap":
        if width <= 0 or height <= 0:
            raise UsageError("map dimensions must be positive")
        return cls(
            disparity=np.zeros((height, width)),
            reliability=np.zeros((height, width)),
            present=np.zeros((height, width), dtype=bool),
            exposure=exposure,
        )


@dataclass(frozen=True)
class DepthHistogram:
    """Depth-bin vote counts for one window of a disparity map."""

    bin_width: float  # mm
    bins: Dict[int, int] = field(default_factory=dict)
    total_count: int = 0

    def __post_init__(self) -> None:
        if sum(self.bins.values()) != self.total_count:
            raise UsageError("total_count must equal the sum over bins")


@dataclass(frozen=True)
class DensityReport:
    """Cell-count comparison of a fused map against its two inputs."""

    present_first: int
    present_second: int
    present_fused: int
    adopted_first: int
    adopted_second: int


def _check_same_shape(a: DisparityMap, b: DisparityMap) -> None:
    if (a.height, a.width) != (b.height, b.width):
        raise UsageError(
            f"map dimensions differ: {(a.height, a.width)} vs {(b.height, b.width)}"
        )


def fuse_disparity_maps(first: DisparityMap, second: DisparityMap) -> DisparityMap:
    """Merge two same-size maps, cell by cell, by reliability.

    Both present: the strictly higher reliability wins, ties adopt the second
    map's cell.  One present: that cell is adopted.  Neither: absent.  The
    result carries a per-cell ``provenance`` array and the FUSED exposure tag.
    """
    _check_same_shape(first, second)
    d, r, p, prov = impl.fuse_maps(
        first.disparity,
        first.reliability,
        first.present,
        second.disparity,
        second.reliability,
        second.present,
    )
    return DisparityMap(
        disparity=d,
        reliability=r,
        present=p,
        exposure=Exposure.FUSED,
        provenance=prov,
    )


def fused_density_report(
    first: DisparityMap, second: DisparityMap, fused: DisparityMap
) -> DensityReport:
    """Summarise cell density and adoption counts of a fusion result."""
    _check_same_shape(first, second)
    _check_same_shape(first, fused)
    if fused.provenance is None:
        raise UsageError("fused map carries no provenance; was it produced by fuse?")
    return DensityReport(
        present_first=first.cell_count,
        present_second=second.cell_count,
        present_fused=fused.cell_count,
        adopted_first=int((fused.provenance == PROV_FIRST).sum()),
        adopted_second=int((fused.provenance == PROV_SECOND).sum()),
    )


def compute_depth_histogram(
    dmap: DisparityMap,
    roi: Tuple[int, int, int, int],
    model: CameraModel,
    bin_width: float = DEFAULT_BIN_WIDTH,
) -> DepthHistogram:
    """Histogram the depths of present cells inside ``roi`` = (x, y, w, h).

    Every present cell votes once, into ``floor(distance / bin_width)``;
    ``total_count`` is the number of voting cells.
    """
    x, y, w, h = roi
    if w <= 0 or h <= 0:
        raise UsageError("roi must have positive width and height")
    if x < 0 or y < 0 or x + w > dmap.width or y + h > dmap.height:
        raise UsageError("roi extends outside the map")
    if bin_width <= 0:
        raise UsageError("bin_width must be positive")
    bins, counts, total, _ = impl.depth_stats(
        dmap.disparity, dmap.present, x, y, w, h, model.stereo_constant, bin_width
    )
    return DepthHistogram(
        bin_width=bin_width,
        bins={int(b): int(c) for b, c in zip(bins, counts)},
        total_count=total,
    )


def roi_distance_estimate(
    dmap: DisparityMap,
    roi: Tuple[int, int, int, int],
    model: CameraModel,
    bin_width: float = DEFAULT_BIN_WIDTH,
) -> Tuple[Optional[float], int]:
    """Distance of the dominant depth cluster inside ``roi``.

    Returns ``(distance_mm, total_count)``; the distance is the mean over
    cells within one bin of the modal depth bin, or None when the window
    holds no cells.  This is the measurement the tracking pipeline consumes.
    """
    x, y, w, h = roi
    if w <= 0 or h <= 0:
        raise UsageError("roi must have positive width and height")
    if x < 0 or y < 0 or x + w > dmap.width or y + h > dmap.height:
        raise UsageError("roi extends outside the map")
    _, _, total, d_est = impl.depth_stats(
        dmap.disparity, dmap.present, x, y, w, h, model.stereo_constant, bin_width
    )
    if total == 0:
        return None, 0
    return float(d_est), total


def save_dmap(dmap: DisparityMap, path: str) -> None:
    """Write a map as text: header ``DMAP <w> <h> <tag>`` then one
    ``<x> <y> <disparity> <reliability>`` line per present cell, row-major."""
    buf = io.StringIO()
    buf.write(f"DMAP {dmap.width} {dmap.height} {dmap.exposure.value}\n")
    ys, xs = np.nonzero(dmap.present)  # nonzero is row-major already
    disp = dmap.disparity
    rel = dmap.reliability
    for yy, xx in zip(ys.tolist(), xs.tolist()):
        buf.write(f"{xx} {yy} {float(disp[yy, xx])!r} {float(rel[yy, xx])!r}\n")
    with open(path, "w", encoding="ascii") as f:
        f.write(buf.getvalue())


def load_dmap(path: str) -> DisparityMap:
    """Read a map written by :func:`save_dmap`."""
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != "DMAP":
            raise UsageError(f"not a DMAP file: {path}")
        try:
            width, height = int(header[1]), int(header[2])
            exposure = Exposure(header[3])
        except ValueError as exc:
            raise UsageError(f"bad DMAP header in {path}: {exc}") from exc
        dmap = DisparityMap.empty(width, height, exposure)
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise UsageError(f"{path}:{lineno}: expected 4 fields")
            x, y = int(parts[0]), int(parts[1])
            if not (0 <= x < width and 0 <= y < height):
                raise UsageError(f"{path}:{lineno}: cell ({x}, {y}) out of bounds")
            dmap.disparity[y, x] = float(parts[2])
            dmap.reliability[y, x] = float(parts[3])
            dmap.present[y, x] = True
    # re-validate now that cells are populated
    return DisparityMap(
        disparity=dmap.disparity,
        reliability=dmap.reliability,
        present=dmap.present,
        exposure=exposure,
    )
