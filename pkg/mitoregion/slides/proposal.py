"""Предложение области 10 HPF с максимальной митотической активностью."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from slides.annotations import agreed_mitoses, as_array, window_count
from slides.constants import HIGH_GRADE_MC
from slides.exceptions import DomainError, EmptyMaskError
from slides.geometry import WindowSize, hpf_window_pixels, window_at_scale
from slides.integral import integral, row_bands, window_sums
from slides.maskgen import MaskParams, to_grayscale, valid_mask
from slides.raster import SlideRaster, downsample

logger = logging.getLogger(__name__)

OVERLAY_VALUE = 255


class Quartile(str, Enum):
    Q1 = 'Q1'
    Q2 = 'Q2'
    Q3 = 'Q3'
    Q4 = 'Q4'


class Peak(NamedTuple):
    origin: Tuple[int, int]
    window_sum: float
    score: float


@dataclass(frozen=True)
class RegionProposal:
    origin_x: int
    origin_y: int
    window: WindowSize
    activity_score: float
    gt_mc: Optional[int] = None
    map_origin: Tuple[int, int] = (0, 0)
    window_sum: float = 0.0
    scale: int = 1

    @property
    def origin(self):
        return (self.origin_x, self.origin_y)


@dataclass(frozen=True)
class McDistribution:
    counts: Tuple[int, ...]
    q1: float
    q2: float
    q3: float


def _check_aligned(activity, valid):
    if activity.scale != valid.scale:
        raise DomainError(
            f'масштаб карты активности ({activity.scale}) не совпадает '
            f'с масштабом маски ({valid.scale})'
        )
    if activity.values.shape != valid.bits.shape:
        raise DomainError(
            f'карта активности {activity.width_px}x{activity.height_px} '
            f'и маска {valid.width_px}x{valid.height_px} разного размера'
        )


def masked_argmax(activity, valid, window, threads=1):
    """Допустимое начало окна с максимальной суммой активности.

    Равные суммы разрешаются в пользу меньшего (y, x). Полосы строк
    обрабатываются параллельно, результат от числа потоков не зависит.
    """
    _check_aligned(activity, valid)
    table = integral(activity)
    rows = activity.height_px - window.height_px + 1
    cols = activity.width_px - window.width_px + 1
    if rows < 1 or cols < 1:
        raise EmptyMaskError(
            f'окно {window.width_px}x{window.height_px} не помещается '
            f'в карту {activity.width_px}x{activity.height_px}'
        )

    def best_in_band(band):
        top, bottom = band
        allowed = valid.bits[top:bottom, :cols].astype(bool)
        if not allowed.any():
            return None
        sums = window_sums(table, window, rows=band)
        masked = np.where(allowed, sums, -np.inf)
        y, x = divmod(int(np.argmax(masked)), cols)
        return float(sums[y, x]), top + y, x

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        candidates = [
            best for best in pool.map(best_in_band, row_bands(rows, threads))
            if best is not None
        ]
    if not candidates:
        raise EmptyMaskError('маска не содержит ни одного допустимого окна')
    total, y, x = max(
        candidates, key=lambda best: (best[0], -best[1], -best[2])
    )
    return Peak((x, y), total, total / window.area_px)


def full_resolution_origin(map_origin, scale, window, width, height):
    """Перевести начало окна в полное разрешение, не выходя за препарат."""
    if window.width_px > width or window.height_px > height:
        raise DomainError(
            f'окно {window.width_px}x{window.height_px} больше препарата '
            f'{width}x{height}'
        )
    x, y = map_origin
    clamped = (
        min(x * scale, width - window.width_px),
        min(y * scale, height - window.height_px),
    )
    if clamped != (x * scale, y * scale):
        logger.warning(
            'начало окна (%d, %d) сдвинуто в (%d, %d), чтобы окно '
            'не выходило за препарат', x * scale, y * scale, *clamped
        )
    return clamped


def propose(
    raster, activity, spec, params=MaskParams(), annotations=None,
    valid=None, threads=1,
):
    window = hpf_window_pixels(spec, raster.resolution_um_per_px)
    if valid is None:
        valid = valid_mask(raster, window, params)
    map_window = window_at_scale(window, activity.scale)
    peak = masked_argmax(activity, valid, map_window, threads=threads)
    origin_x, origin_y = full_resolution_origin(
        peak.origin, activity.scale, window,
        raster.width_px, raster.height_px,
    )
    gt_mc = None
    if annotations is not None:
        gt_mc = window_count(
            agreed_mitoses(annotations), (origin_x, origin_y), window
        )
    logger.info(
        'предложено окно %dx%d в (%d, %d), активность %.4f',
        window.width_px, window.height_px, origin_x, origin_y, peak.score
    )
    return RegionProposal(
        origin_x, origin_y, window, peak.score, gt_mc,
        map_origin=peak.origin, window_sum=peak.window_sum,
        scale=activity.scale,
    )


def window_counts(points, origins, window):
    """Число точек в окне для каждого начала из ``origins``.

    Префиксные суммы строятся на сжатой сетке из границ окон, поэтому
    память не зависит от размера препарата.
    """
    origins = as_array(origins)
    coords = as_array(points)
    if origins.shape[0] == 0 or coords.shape[0] == 0:
        return np.zeros(origins.shape[0], dtype=np.int64)
    edges_x = np.unique(np.concatenate(
        (origins[:, 0], origins[:, 0] + window.width_px)
    ))
    edges_y = np.unique(np.concatenate(
        (origins[:, 1], origins[:, 1] + window.height_px)
    ))
    cells = np.zeros((edges_y.size + 1, edges_x.size + 1), dtype=np.int64)
    np.add.at(cells, (
        np.searchsorted(edges_y, coords[:, 1], side='right'),
        np.searchsorted(edges_x, coords[:, 0], side='right'),
    ), 1)
    prefix = cells.cumsum(axis=0).cumsum(axis=1)
    x0 = np.searchsorted(edges_x, origins[:, 0])
    x1 = np.searchsorted(edges_x, origins[:, 0] + window.width_px)
    y0 = np.searchsorted(edges_y, origins[:, 1])
    y1 = np.searchsorted(edges_y, origins[:, 1] + window.height_px)
    return prefix[y1, x1] - prefix[y0, x1] - prefix[y1, x0] + prefix[y0, x0]


def stride_origins(valid, window, stride, slide_size=None):
    """Допустимые начала окна на сетке с шагом ``stride`` в пикселях."""
    scale = valid.scale
    if stride < 1 or stride % scale:
        raise DomainError(
            f'stride={stride} должен быть положительным и кратным '
            f'масштабу маски {scale}'
        )
    step = stride // scale
    grid = np.zeros_like(valid.bits, dtype=bool)
    grid[::step, ::step] = True
    ys, xs = np.nonzero(valid.bits.astype(bool) & grid)
    origins = [(int(x), int(y)) for y, x in zip(ys, xs)]
    if slide_size is None:
        return [(x * scale, y * scale) for x, y in origins]
    width, height = slide_size
    return [
        full_resolution_origin(origin, scale, window, width, height)
        for origin in origins
    ]


def mc_distribution(points, valid, window, stride, slide_size=None):
    origins = stride_origins(valid, window, stride, slide_size)
    if not origins:
        raise EmptyMaskError(
            'нет допустимых положений окна для распределения MC'
        )
    counts = window_counts(points, origins, window)
    q1, q2, q3 = np.percentile(counts, (25, 50, 75))
    return McDistribution(
        tuple(int(c) for c in counts), float(q1), float(q2), float(q3)
    )


def quartile_placement(proposal_mc, distribution):
    if not distribution.counts:
        raise EmptyMaskError('распределение MC пусто')
    if proposal_mc >= distribution.q3:
        return Quartile.Q4
    if proposal_mc >= distribution.q2:
        return Quartile.Q3
    if proposal_mc >= distribution.q1:
        return Quartile.Q2
    return Quartile.Q1


def estimated_count(proposal, circle):
    """Оценка MC по карте активности: масса окна / масса одного круга."""
    return proposal.window_sum * proposal.scale ** 2 / circle.pixel_count


def is_high_grade(mitotic_count, cutoff=HIGH_GRADE_MC):
    return mitotic_count >= cutoff


def render_overlay(raster, proposal, scale):
    """Уменьшенный серый препарат с белой рамкой предложенного окна."""
    gray = to_grayscale(SlideRaster(
        downsample(raster.pixels, scale), raster.resolution_um_per_px
    ))
    image = Image.fromarray(np.array(gray.pixels))
    right = min(
        (proposal.origin_x + proposal.window.width_px) // scale,
        image.width
    ) - 1
    bottom = min(
        (proposal.origin_y + proposal.window.height_px) // scale,
        image.height
    ) - 1
    left = proposal.origin_x // scale
    top = proposal.origin_y // scale
    ImageDraw.Draw(image).rectangle(
        (left, top, max(left, right), max(top, bottom)),
        outline=OVERLAY_VALUE,
    )
    return SlideRaster(
        np.asarray(image, dtype=np.uint8),
        raster.resolution_um_per_px * scale,
    )
