"""Синтетические препараты с известной разметкой и эталонные переборы."""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from slides.annotations import (
    Annotation,
    AnnotationSet,
    Label,
    agreed_mitoses,
    window_count,
)
from slides.constants import (
    MEGAPIXEL,
    ORACLE_MAX_WORK,
    SYNTH_BACKGROUND_GRAY,
    SYNTH_BLUR_PX,
    SYNTH_TISSUE_GRAY,
)
from slides.density import CircleSpec
from slides.exceptions import DomainError, EmptyMaskError, OracleScaleError
from slides.geometry import hpf_window_pixels, window_at_scale
from slides.maskgen import MaskParams, compute_valid_mask, required_count
from slides.proposal import RegionProposal, full_resolution_origin
from slides.raster import BinaryMask, DensityMap, SlideRaster
from slides.rng import (
    STREAM_FALSE_NEGATIVES,
    STREAM_FALSE_POSITIVES,
    STREAM_LABELS,
    STREAM_POINTS,
    STREAM_RASTER,
    stream,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ellipse:
    center_x: float
    center_y: float
    semi_axis_x: float
    semi_axis_y: float
    rotation_deg: float = 0.0

    def contains(self, xs, ys):
        angle = math.radians(self.rotation_deg)
        dx = xs - self.center_x
        dy = ys - self.center_y
        u = dx * math.cos(angle) + dy * math.sin(angle)
        v = -dx * math.sin(angle) + dy * math.cos(angle)
        return (u / self.semi_axis_x) ** 2 + (v / self.semi_axis_y) ** 2 <= 1


@dataclass(frozen=True)
class Hotspot:
    center_x: float
    center_y: float
    sigma_px: float
    rate: float

    def intensity(self, xs, ys):
        distance2 = (xs - self.center_x) ** 2 + (ys - self.center_y) ** 2
        return self.rate * np.exp(-distance2 / (2 * self.sigma_px ** 2))


@dataclass(frozen=True)
class SynthSpec:
    """Параметры синтетического препарата.

    Интенсивности (``base_rate`` и ``rate`` очагов) заданы в митозах на
    мегапиксель ткани.
    """

    width: int
    height: int
    tissue: Tuple[Ellipse, ...]
    hotspots: Tuple[Hotspot, ...] = ()
    base_rate: float = 0.0
    background_gray: int = SYNTH_BACKGROUND_GRAY
    tissue_gray: int = SYNTH_TISSUE_GRAY
    noise_sigma: float = 0.0
    seed: int = 0
    resolution_um_per_px: float = 0.25
    disagreement_fraction: float = 0.0
    unclassifiable_fraction: float = 0.0
    slide_id: str = 'synthetic'

    def __post_init__(self):
        object.__setattr__(self, 'tissue', tuple(self.tissue))
        object.__setattr__(self, 'hotspots', tuple(self.hotspots))
        if self.width < 1 or self.height < 1:
            raise DomainError('width и height должны быть >= 1')
        if not self.tissue:
            raise DomainError('tissue: нужен хотя бы один эллипс')
        if self.base_rate < 0 or any(h.rate < 0 for h in self.hotspots):
            raise DomainError('интенсивности должны быть >= 0')
        if any(h.sigma_px <= 0 for h in self.hotspots):
            raise DomainError('sigma_px очагов должна быть > 0')
        for name in ('background_gray', 'tissue_gray'):
            if not 0 <= getattr(self, name) <= 255:
                raise DomainError(f'{name} должен лежать в [0, 255]')
        if self.noise_sigma < 0:
            raise DomainError('noise_sigma должна быть >= 0')
        fractions = (self.disagreement_fraction, self.unclassifiable_fraction)
        if min(fractions) < 0 or sum(fractions) > 1:
            raise DomainError(
                'доли disagreement/unclassifiable должны быть >= 0 '
                'и в сумме не больше 1'
            )

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data['tissue'] = tuple(Ellipse(**item) for item in data['tissue'])
        data['hotspots'] = tuple(
            Hotspot(**item) for item in data.get('hotspots', ())
        )
        return cls(**data)

    def tissue_at(self, xs, ys):
        inside = np.zeros(np.broadcast(xs, ys).shape, dtype=bool)
        for ellipse in self.tissue:
            inside |= ellipse.contains(xs, ys)
        return inside

    def intensity_at(self, xs, ys):
        """Интенсивность в митозах на пиксель."""
        rate = np.full(np.broadcast(xs, ys).shape, self.base_rate, dtype=float)
        for hotspot in self.hotspots:
            rate = rate + hotspot.intensity(xs, ys)
        return rate / MEGAPIXEL

    @property
    def peak_intensity(self):
        rates = self.base_rate + sum(h.rate for h in self.hotspots)
        return rates / MEGAPIXEL

    def tissue_mask(self, scale=1):
        """Ткань на сетке масштаба ``scale`` по центрам пикселей."""
        half = scale // 2
        xs = np.arange(self.width // scale, dtype=float) * scale + half
        ys = np.arange(self.height // scale, dtype=float) * scale + half
        return BinaryMask(
            self.tissue_at(xs[None, :], ys[:, None]), scale=scale
        )


def _grid(spec):
    return np.meshgrid(
        np.arange(spec.width, dtype=float), np.arange(spec.height, dtype=float)
    )


def _render_raster(spec):
    xs, ys = _grid(spec)
    gray = np.where(
        spec.tissue_at(xs, ys), spec.tissue_gray, spec.background_gray
    ).astype(float)
    if spec.noise_sigma > 0:
        rng = stream(spec.seed, STREAM_RASTER)
        gray += rng.normal(0.0, spec.noise_sigma, size=gray.shape)
    pixels = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    return SlideRaster(pixels, spec.resolution_um_per_px)


def _thin_points(spec):
    """Неоднородный пуассоновский процесс прореживанием по максимуму."""
    rng = stream(spec.seed, STREAM_POINTS)
    peak = spec.peak_intensity
    if peak <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    total = rng.poisson(peak * spec.width * spec.height)
    xs = rng.integers(0, spec.width, size=total)
    ys = rng.integers(0, spec.height, size=total)
    accept = rng.random(total) * peak < spec.intensity_at(xs, ys)
    accept &= spec.tissue_at(xs.astype(float), ys.astype(float))
    points = np.stack((xs[accept], ys[accept]), axis=1)
    if points.shape[0] == 0:
        return points
    _, first = np.unique(points, axis=0, return_index=True)
    return points[np.sort(first)]


def _labels(spec, count):
    rng = stream(spec.seed, STREAM_LABELS)
    draws = rng.random(count)
    disagree = spec.disagreement_fraction
    unclassifiable = disagree + spec.unclassifiable_fraction
    for draw in draws:
        if draw < disagree:
            yield Label.MITOSIS, Label.NON_MITOSIS
        elif draw < unclassifiable:
            yield Label.UNCLASSIFIABLE, Label.UNCLASSIFIABLE
        else:
            yield Label.MITOSIS, Label.MITOSIS


def generate(spec):
    raster = _render_raster(spec)
    points = _thin_points(spec)
    items = tuple(
        Annotation(int(x), int(y), obs1, obs2)
        for (x, y), (obs1, obs2) in zip(points, _labels(spec, len(points)))
    )
    logger.info(
        'синтетический препарат %dx%d: %d аннотаций',
        spec.width, spec.height, len(items)
    )
    return raster, AnnotationSet(
        spec.slide_id, spec.width, spec.height, items
    )


def _stamp(values, centers, circle):
    radius = circle.radius_px
    offsets = np.arange(-radius, radius + 1)
    disc = offsets[:, None] ** 2 + offsets[None, :] ** 2 <= radius * radius
    height, width = values.shape
    for cx, cy in centers:
        top, left = cy - radius, cx - radius
        rows = slice(max(0, top), min(height, cy + radius + 1))
        cols = slice(max(0, left), min(width, cx + radius + 1))
        piece = disc[rows.start - top:rows.stop - top,
                     cols.start - left:cols.stop - left]
        values[rows, cols] = np.maximum(values[rows, cols], piece)


def default_blur(scale):
    """Радиус размытия на сетке карты для 8 px полного разрешения."""
    if scale < 1:
        raise DomainError(f'scale должен быть >= 1, получено {scale}')
    return max(1, SYNTH_BLUR_PX // scale)


def matched_fp_rate(annotations, tissue):
    """Плотность согласованных митозов на мегапиксель ткани."""
    tissue_px = tissue.count() * tissue.scale ** 2
    if tissue_px == 0:
        return 0.0
    return len(agreed_mitoses(annotations)) * MEGAPIXEL / tissue_px


def corrupt_map(
    gt_map, fp_rate, fn_rate, blur_radius, seed, circle=CircleSpec(),
    tissue=None,
):
    """Имитация неидеального детектора поверх эталонной карты.

    Каждая связная область (круг) удаляется с вероятностью ``fn_rate``,
    ложные круги добавляются с интенсивностью ``fp_rate`` на мегапиксель
    ткани (в полном разрешении), затем box-размытие и обрезка в [0, 1].
    """
    if not (0 <= fp_rate and 0 <= fn_rate < 1):
        raise DomainError('fn_rate должна лежать в [0, 1), fp_rate >= 0')
    if blur_radius < 0:
        raise DomainError('blur_radius должен быть >= 0')
    values = np.array(gt_map.values, dtype=np.float32)
    labels, count = ndimage.label(values > 0)
    if fn_rate > 0 and count:
        dropped = stream(seed, STREAM_FALSE_NEGATIVES).random(count) < fn_rate
        values[np.isin(labels, np.flatnonzero(dropped) + 1)] = 0
    if fp_rate > 0:
        area = tissue.bits.astype(bool) if tissue is not None else (
            np.ones(values.shape, dtype=bool)
        )
        ys, xs = np.nonzero(area)
        tissue_px = ys.size * gt_map.scale ** 2
        rng = stream(seed, STREAM_FALSE_POSITIVES)
        spurious = rng.poisson(fp_rate * tissue_px / MEGAPIXEL)
        if spurious and ys.size:
            picks = rng.integers(0, ys.size, size=spurious)
            radius = max(1, round(circle.radius_px / gt_map.scale))
            _stamp(values, zip(xs[picks], ys[picks]), CircleSpec(radius))
    if blur_radius > 0:
        values = ndimage.uniform_filter(
            values, size=2 * blur_radius + 1, mode='constant'
        )
    return DensityMap(np.clip(values, 0, 1), scale=gt_map.scale)


def oracle_propose(
    raster, activity, spec, params=MaskParams(), annotations=None
):
    """Полный перебор положений окна без интегральных изображений."""
    window = hpf_window_pixels(spec, raster.resolution_um_per_px)
    report = compute_valid_mask(raster, window, params)
    closed = report.closed.bits
    kernel = window_at_scale(window, activity.scale)
    if activity.scale != params.downsample:
        raise DomainError('масштаб карты активности и маски различаются')
    w, h = kernel.width_px, kernel.height_px
    rows = activity.height_px - h + 1
    cols = activity.width_px - w + 1
    if rows < 1 or cols < 1:
        raise EmptyMaskError('окно не помещается в карту')
    if rows * cols * w * h > ORACLE_MAX_WORK:
        raise OracleScaleError(
            f'перебор {rows}x{cols} окон {w}x{h} слишком велик для эталона'
        )
    needed = required_count(params.coverage_threshold, kernel)
    values = activity.values.astype(np.float64)
    best = None
    for y in range(rows):
        for x in range(cols):
            if int(closed[y:y + h, x:x + w].sum()) < needed:
                continue
            total = float(values[y:y + h, x:x + w].sum())
            if best is None or total > best[0]:
                best = (total, x, y)
    if best is None:
        raise EmptyMaskError('маска не содержит ни одного допустимого окна')
    total, x, y = best
    origin = full_resolution_origin(
        (x, y), activity.scale, window, raster.width_px, raster.height_px
    )
    gt_mc = None
    if annotations is not None:
        gt_mc = window_count(agreed_mitoses(annotations), origin, window)
    return RegionProposal(
        origin[0], origin[1], window, total / kernel.area_px, gt_mc,
        map_origin=(x, y), window_sum=total, scale=activity.scale,
    )
