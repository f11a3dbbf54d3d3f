"""Dense optical flow from local polynomial expansion.

Each pixel neighborhood is fit (Gaussian-weighted least squares) to a
quadratic surface f(u) ~ u'Au + b'u + c; displacements follow from how
the linear coefficients shift between two frames, solved over an
averaging window and refined coarse-to-fine over an image pyramid.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .boxes import BoundingBox, intersection_area, pixel_span
from .frames import GrayFrame

# Local 2x2 systems with condition estimates beyond this are treated as
# degenerate and fall back to the seed displacement.
_COND_LIMIT = 1e6
_MIN_EIG = 1e-9


@dataclass(frozen=True)
class FlowParams:
    pyramid_levels: int = 3
    pyramid_scale: float = 0.5
    window: int = 15
    iterations: int = 3
    poly_n: int = 5
    poly_sigma: float = 1.1

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")
        if not 0.0 < self.pyramid_scale < 1.0:
            raise ValueError("pyramid_scale must be in (0, 1)")
        if self.window < 5 or self.window % 2 == 0:
            raise ValueError("window must be an odd integer >= 5")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.poly_n < 5 or self.poly_n % 2 == 0:
            raise ValueError("poly_n must be an odd integer >= 5")
        if self.poly_sigma <= 0:
            raise ValueError("poly_sigma must be positive")


@dataclass
class FlowField:
    """Per-pixel displacement in pixels; dx is columnwise, dy rowwise."""

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.dx = np.asarray(self.dx, dtype=np.float64)
        self.dy = np.asarray(self.dy, dtype=np.float64)
        if self.dx.shape != self.dy.shape or self.dx.ndim != 2:
            raise ValueError("dx and dy must be 2-D arrays of equal shape")

    @property
    def width(self) -> int:
        return self.dx.shape[1]

    @property
    def height(self) -> int:
        return self.dx.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.dx, self.dy)

    @classmethod
    def zeros(cls, width: int, height: int) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))


@dataclass
class PolyExpansion:
    """Quadratic-fit coefficients per pixel (A symmetric 2x2, b, c)."""

    a11: np.ndarray  # x^2 coefficient
    a22: np.ndarray  # y^2 coefficient
    a12: np.ndarray  # half the xy coefficient
    bx: np.ndarray
    by: np.ndarray
    c: np.ndarray

    @property
    def A(self) -> np.ndarray:
        out = np.empty(self.a11.shape + (2, 2))
        out[..., 0, 0] = self.a11
        out[..., 0, 1] = self.a12
        out[..., 1, 0] = self.a12
        out[..., 1, 1] = self.a22
        return out

    @property
    def b(self) -> np.ndarray:
        return np.stack([self.bx, self.by], axis=-1)


def _as_image(frame) -> np.ndarray:
    if isinstance(frame, GrayFrame):
        return frame.pixels.astype(np.float64)
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D image")
    return arr


def poly_expand(frame, poly_n: int = 5, poly_sigma: float = 1.1) -> PolyExpansion:
    """Fit every pixel neighborhood to a quadratic in {1,x,y,x2,y2,xy}.

    Borders use edge replication.  The fit is exact for polynomial
    images up to degree two away from the borders.
    """
    img = _as_image(frame)
    n = poly_n // 2
    if min(img.shape) < poly_n:
        raise ValueError(f"image {img.shape} smaller than expansion window {poly_n}")
    x = np.arange(-n, n + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * poly_sigma * poly_sigma))
    g /= g.sum()
    k0, k1, k2 = g, g * x, g * x * x

    # Metric of the weighted basis; solved once, applied per pixel.
    X, Y = np.meshgrid(x, x)
    w2d = np.outer(g, g)
    basis = np.stack([np.ones_like(X), X, Y, X * X, Y * Y, X * Y])
    G = np.einsum("yx,iyx,jyx->ij", w2d, basis, basis)
    Ginv = np.linalg.inv(G)

    def corr(image, ky, kx):
        tmp = ndimage.correlate1d(image, ky, axis=0, mode="nearest")
        return ndimage.correlate1d(tmp, kx, axis=1, mode="nearest")

    v = np.stack([
        corr(img, k0, k0),
        corr(img, k0, k1),
        corr(img, k1, k0),
        corr(img, k0, k2),
        corr(img, k2, k0),
        corr(img, k1, k1),
    ], axis=-1)
    r = v @ Ginv.T
    return PolyExpansion(
        a11=r[..., 3], a22=r[..., 4], a12=r[..., 5] * 0.5,
        bx=r[..., 1], by=r[..., 2], c=r[..., 0],
    )


def _gaussian_kernel(length: int) -> np.ndarray:
    sigma = 0.3 * ((length - 1) * 0.5 - 1.0) + 0.8
    x = np.arange(length, dtype=np.float64) - (length - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    tmp = ndimage.correlate1d(arr, kernel, axis=0, mode="nearest")
    return ndimage.correlate1d(tmp, kernel, axis=1, mode="nearest")


def _warp(arr: np.ndarray, rr: np.ndarray, cc: np.ndarray) -> np.ndarray:
    return ndimage.map_coordinates(arr, [rr, cc], order=1, mode="nearest")


def _update_flow(e1: PolyExpansion, e2: PolyExpansion, dx, dy, window: int):
    h, w = dx.shape
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64),
                             np.arange(w, dtype=np.float64), indexing="ij")
    rr, cc = rows + dy, cols + dx
    a11 = 0.5 * (e1.a11 + _warp(e2.a11, rr, cc))
    a12 = 0.5 * (e1.a12 + _warp(e2.a12, rr, cc))
    a22 = 0.5 * (e1.a22 + _warp(e2.a22, rr, cc))
    db1 = -0.5 * (_warp(e2.bx, rr, cc) - e1.bx) + a11 * dx + a12 * dy
    db2 = -0.5 * (_warp(e2.by, rr, cc) - e1.by) + a12 * dx + a22 * dy

    # Normal equations of min ||A d - db||^2, averaged over the window.
    kernel = _gaussian_kernel(window)
    m11 = _blur(a11 * a11 + a12 * a12, kernel)
    m12 = _blur(a12 * (a11 + a22), kernel)
    m22 = _blur(a12 * a12 + a22 * a22, kernel)
    h1 = _blur(a11 * db1 + a12 * db2, kernel)
    h2 = _blur(a12 * db1 + a22 * db2, kernel)

    half_gap = np.sqrt((m11 - m22) ** 2 + 4.0 * m12 * m12)
    lam_min = 0.5 * ((m11 + m22) - half_gap)
    lam_max = 0.5 * ((m11 + m22) + half_gap)
    # the absolute floor rejects featureless patches whose tiny eigenvalues
    # would otherwise pass the ratio test on rounding noise
    ok = (lam_min > _MIN_EIG) & (lam_max <= _COND_LIMIT * lam_min)
    det = np.where(ok, m11 * m22 - m12 * m12, 1.0)
    new_dx = np.where(ok, (m22 * h1 - m12 * h2) / det, dx)
    new_dy = np.where(ok, (m11 * h2 - m12 * h1) / det, dy)
    return new_dx, new_dy


def _resize(arr: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    factors = (shape[0] / arr.shape[0], shape[1] / arr.shape[1])
    return ndimage.zoom(arr, factors, order=1, mode="nearest", grid_mode=True)


def estimate_flow(prev, nxt, params: FlowParams | None = None,
                  seed: FlowField | None = None) -> FlowField:
    """Dense displacement from `prev` to `nxt`, coarse-to-fine.

    Ill-conditioned pixels keep the seed (or zero) displacement so the
    field is always fully populated.
    """
    params = params or FlowParams()
    img1, img2 = _as_image(prev), _as_image(nxt)
    if img1.shape != img2.shape:
        raise ValueError(f"frame shapes differ: {img1.shape} vs {img2.shape}")

    # Pyramid, finest first; levels that cannot hold the expansion
    # window are dropped.
    pyr1, pyr2 = [img1], [img2]
    sigma = np.sqrt(1.0 / params.pyramid_scale**2 - 1.0)
    for _ in range(params.pyramid_levels - 1):
        cur1, cur2 = pyr1[-1], pyr2[-1]
        shape = (max(1, round(cur1.shape[0] * params.pyramid_scale)),
                 max(1, round(cur1.shape[1] * params.pyramid_scale)))
        if min(shape) < params.poly_n:
            break
        pyr1.append(_resize(ndimage.gaussian_filter(cur1, sigma, mode="nearest"), shape))
        pyr2.append(_resize(ndimage.gaussian_filter(cur2, sigma, mode="nearest"), shape))

    dx = dy = None
    for level in reversed(range(len(pyr1))):
        shape = pyr1[level].shape
        if dx is None:
            if seed is not None:
                dx = _resize(seed.dx, shape) * (shape[1] / seed.dx.shape[1])
                dy = _resize(seed.dy, shape) * (shape[0] / seed.dx.shape[0])
            else:
                dx = np.zeros(shape)
                dy = np.zeros(shape)
        else:
            prev_shape = dx.shape
            dx = _resize(dx, shape) * (shape[1] / prev_shape[1])
            dy = _resize(dy, shape) * (shape[0] / prev_shape[0])
        e1 = poly_expand(pyr1[level], params.poly_n, params.poly_sigma)
        e2 = poly_expand(pyr2[level], params.poly_n, params.poly_sigma)
        for _ in range(params.iterations):
            dx, dy = _update_flow(e1, e2, dx, dy, params.window)
    return FlowField(dx, dy)


def magnitude_stats(flow: FlowField, mask: np.ndarray | None = None) -> tuple[float, float]:
    """Mean and population std of the flow magnitude over a region."""
    mag = flow.magnitude()
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != mag.shape:
            raise ValueError("mask shape must match the flow field")
        if not mask.any():
            raise ValueError("mask selects no pixels")
        mag = mag[mask]
    return float(mag.mean()), float(mag.std())


def mask_worker_regions(flow: FlowField, patient: BoundingBox,
                        workers: list[BoundingBox]) -> FlowField:
    """Zero the flow where worker boxes overlap the patient box."""
    dx, dy = flow.dx.copy(), flow.dy.copy()
    for worker in workers:
        if intersection_area(patient, worker) <= 0:
            continue
        overlap = BoundingBox(
            max(patient.x, worker.x), max(patient.y, worker.y),
            min(patient.right, worker.right) - max(patient.x, worker.x),
            min(patient.bottom, worker.bottom) - max(patient.y, worker.y),
        )
        span = pixel_span(overlap, flow.width, flow.height)
        if span is not None:
            dx[span] = 0.0
            dy[span] = 0.0
    return FlowField(dx, dy)


def write_flow_file(flow: FlowField, path) -> None:
    """Debug dump: u32 width, u32 height, then dx and dy as f32, all LE."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", flow.width, flow.height))
        fh.write(flow.dx.astype("<f4").tobytes())
        fh.write(flow.dy.astype("<f4").tobytes())


def read_flow_file(path) -> FlowField:
    with open(path, "rb") as fh:
        w, h = struct.unpack("<II", fh.read(8))
        count = w * h
        dx = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(h, w)
        dy = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(h, w)
    return FlowField(dx, dy)
