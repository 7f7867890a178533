"""Pixel-space reconstruction metrics: MSE, PSNR and SSIM.

SSIM is single-scale with a 7x7 uniform window over valid positions
(no padding), computed per frame and channel and then averaged; window
statistics use the biased E[xy] - E[x]E[y] form so identical clips score
exactly 1.  PSNR uses the full normalized dynamic range (1.0), so
``psnr = -10 log10(mse)`` and is +inf exactly when the MSE is zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .video import VideoClip

SSIM_WINDOW = 7
_C1 = 0.01 ** 2  # (K1 * L)^2 with L = 1.0
_C2 = 0.03 ** 2


@dataclass(frozen=True)
class MetricsReport:
    l2: float
    psnr: float
    ssim: float

    def to_dict(self) -> dict:
        return {"l2": self.l2, "psnr": self.psnr, "ssim": self.ssim}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _window_mean(img: np.ndarray, k: int) -> np.ndarray:
    """Mean over every k x k window fully inside ``img`` (integral image)."""
    s = np.zeros((img.shape[0] + 1, img.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(img, axis=0), axis=1, out=s[1:, 1:])
    return (s[k:, k:] - s[:-k, k:] - s[k:, :-k] + s[:-k, :-k]) / (k * k)


def ssim_2d(x: np.ndarray, y: np.ndarray, window: int = SSIM_WINDOW) -> float:
    """SSIM between two 2-D float images on the same [-0.5, 0.5] scale."""
    if x.shape[0] < window or x.shape[1] < window:
        raise ValidationError(
            f"image {x.shape} smaller than the {window}x{window} SSIM window")
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    mx = _window_mean(x, window)
    my = _window_mean(y, window)
    vx = _window_mean(x * x, window) - mx * mx
    vy = _window_mean(y * y, window) - my * my
    cxy = _window_mean(x * y, window) - mx * my
    num = (2.0 * mx * my + _C1) * (2.0 * cxy + _C2)
    den = (mx * mx + my * my + _C1) * (vx + vy + _C2)
    return float(np.mean(num / den))


def compute_metrics(original: VideoClip, reconstructed: VideoClip) -> MetricsReport:
    a = original.frames.detach().cpu().numpy().astype(np.float64)
    b = reconstructed.frames.detach().cpu().numpy().astype(np.float64)
    if a.shape != b.shape:
        raise ValidationError(
            f"shape mismatch: {a.shape} vs {b.shape}")
    l2 = float(np.mean((a - b) ** 2))
    psnr = math.inf if l2 == 0.0 else -10.0 * math.log10(l2)
    t, _, _, c = a.shape
    ssim = float(np.mean([ssim_2d(a[i, :, :, ch], b[i, :, :, ch])
                          for i in range(t) for ch in range(c)]))
    return MetricsReport(l2=l2, psnr=psnr, ssim=ssim)


def mean_report(reports: list[MetricsReport]) -> MetricsReport:
    if not reports:
        raise ValidationError("no reports to average")
    return MetricsReport(
        l2=float(np.mean([r.l2 for r in reports])),
        psnr=float(np.mean([r.psnr for r in reports])),
        ssim=float(np.mean([r.ssim for r in reports])),
    )
