"""Маска допустимых положений окна (tissue coverage mask).

Уменьшение -> серый -> порог Оцу -> закрытие -> доля ткани в окне ->
порог покрытия. Бит маски относится к ЛЕВОМУ ВЕРХНЕМУ углу окна.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import ndimage

from slides.constants import (
    CLOSING_RADIUS_PX,
    COVERAGE_THRESHOLD,
    LUMA_WEIGHTS,
    MASK_DOWNSAMPLE,
)
from slides.exceptions import DegenerateInputError, DomainError
from slides.geometry import window_at_scale
from slides.integral import integral, window_sums
from slides.raster import BinaryMask, SlideRaster, downsample

logger = logging.getLogger(__name__)

GRAY_LEVELS = 256


@dataclass(frozen=True)
class MaskParams:
    downsample: int = MASK_DOWNSAMPLE
    closing_radius_px: int = CLOSING_RADIUS_PX
    coverage_threshold: float = COVERAGE_THRESHOLD

    def __post_init__(self):
        if int(self.downsample) != self.downsample or self.downsample < 1:
            raise DomainError(
                'downsample должен быть целым >= 1, '
                f'получено {self.downsample}'
            )
        if (
            int(self.closing_radius_px) != self.closing_radius_px
            or self.closing_radius_px < 0
        ):
            raise DomainError(
                'closing_radius_px должен быть целым >= 0, '
                f'получено {self.closing_radius_px}'
            )
        if not 0 < self.coverage_threshold <= 1:
            raise DomainError(
                'coverage_threshold должен лежать в (0, 1], '
                f'получено {self.coverage_threshold}'
            )


@dataclass(frozen=True)
class MaskReport:
    threshold: int
    tissue: BinaryMask
    closed: BinaryMask
    valid: BinaryMask
    window: object

    @property
    def tissue_fraction(self):
        return self.closed.count() / self.closed.bits.size

    @property
    def valid_origins(self):
        return self.valid.count()


def to_grayscale(raster):
    if raster.channels == 1:
        return raster
    weights = np.asarray(LUMA_WEIGHTS, dtype=np.int64)
    total = int(weights.sum())
    luma = (raster.pixels.astype(np.int64) @ weights + total // 2) // total
    return SlideRaster(luma.astype(np.uint8), raster.resolution_um_per_px)


def _between_class_variances(histogram):
    """Межклассовая дисперсия (с точностью до множителя N^2) для t=0..255.

    Класс A: значения <= t, класс B: значения > t. Считается точно
    в рациональных числах, чтобы равные значения сравнивались честно.
    """
    levels = range(GRAY_LEVELS)
    total = sum(histogram)
    total_sum = sum(level * count for level, count in zip(levels, histogram))
    below = below_sum = 0
    variances = []
    for level, count in zip(levels, histogram):
        below += count
        below_sum += level * count
        above = total - below
        if below == 0 or above == 0:
            variances.append(Fraction(0))
            continue
        spread = below_sum * total - total_sum * below
        variances.append(Fraction(spread * spread, below * above))
    return variances


def otsu_threshold(gray):
    if gray.channels != 1:
        raise DomainError('otsu_threshold ожидает серое изображение')
    histogram = np.bincount(gray.pixels.ravel(), minlength=GRAY_LEVELS)
    variances = _between_class_variances([int(c) for c in histogram])
    best = max(variances)
    if best == 0:
        raise DegenerateInputError(
            'порог Оцу не определён: изображение однотонное'
        )
    return variances.index(best)


def tissue_mask(gray, threshold, scale=1):
    """Ткань темнее фона: бит равен 1, где значение <= порога."""
    if gray.channels != 1:
        raise DomainError('tissue_mask ожидает серое изображение')
    return BinaryMask(gray.pixels <= threshold, scale=scale)


def close(mask, radius):
    """Закрытие квадратом 2r+1.

    За краем изображения дилатация видит 0, эрозия видит 1.
    """
    if radius < 0:
        raise DomainError(f'radius должен быть >= 0, получено {radius}')
    if radius == 0:
        return mask
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    dilated = ndimage.binary_dilation(
        mask.bits.astype(bool), structure=structure, border_value=0
    )
    closed = ndimage.binary_erosion(
        dilated, structure=structure, border_value=1
    )
    return BinaryMask(closed, scale=mask.scale)


def required_count(threshold, window):
    """Минимальное число пикселей ткани: ceil(threshold * w * h)."""
    return math.ceil(Fraction(str(threshold)) * window.area_px)


def coverage_mask(closed, window, threshold):
    height, width = closed.bits.shape
    if window.width_px > width or window.height_px > height:
        raise DomainError(
            f'окно {window.width_px}x{window.height_px} больше карты '
            f'{width}x{height}'
        )
    counts = window_sums(integral(closed), window)
    valid = np.zeros((height, width), dtype=bool)
    valid[:counts.shape[0], :counts.shape[1]] = (
        counts >= required_count(threshold, window)
    )
    return BinaryMask(valid, scale=closed.scale)


def compute_valid_mask(raster, window, params=MaskParams()):
    """Весь конвейер маски с промежуточными результатами для отчёта."""
    scale = params.downsample
    small = downsample(raster.pixels, scale)
    gray = to_grayscale(SlideRaster(small, raster.resolution_um_per_px))
    threshold = otsu_threshold(gray)
    tissue = tissue_mask(gray, threshold, scale=scale)
    closed = close(tissue, params.closing_radius_px)
    kernel = window_at_scale(window, scale)
    valid = coverage_mask(closed, kernel, params.coverage_threshold)
    logger.info(
        'порог Оцу %d, доля ткани %.3f, допустимых положений окна %d',
        threshold, closed.count() / closed.bits.size, valid.count()
    )
    return MaskReport(threshold, tissue, closed, valid, kernel)


def valid_mask(raster, window, params=MaskParams()):
    return compute_valid_mask(raster, window, params).valid
