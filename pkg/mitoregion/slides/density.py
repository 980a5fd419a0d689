"""Карты активности: эталонные круги по аннотациям и сшивка патчей."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from slides.constants import (
    CIRCLE_RADIUS_PX,
    OVERLAP_PER_SIDE,
    OVERLAP_TOTAL,
    PATCH_MARGIN_PX,
    PATCH_SIZE_PX,
)
from slides.exceptions import DomainError
from slides.integral import row_bands
from slides.raster import BinaryMask, DensityMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CircleSpec:
    radius_px: int = CIRCLE_RADIUS_PX

    def __post_init__(self):
        if int(self.radius_px) != self.radius_px or self.radius_px < 1:
            raise DomainError(
                f'radius_px должен быть целым >= 1, получено {self.radius_px}'
            )

    @property
    def pixel_count(self):
        """Число пикселей, центры которых лежат в круге."""
        r = self.radius_px
        offsets = np.arange(-r, r + 1)
        return int(np.count_nonzero(
            offsets[:, None] ** 2 + offsets[None, :] ** 2 <= r * r
        ))


@dataclass(frozen=True)
class PatchGrid:
    width_px: int
    height_px: int
    patch_size_px: int
    margin_px: int
    xs: Tuple[int, ...]
    ys: Tuple[int, ...]

    @property
    def origins(self):
        return [(x, y) for y in self.ys for x in self.xs]

    def x_owners(self):
        return _ownership(self.xs, self.patch_size_px, self.width_px)

    def y_owners(self):
        return _ownership(self.ys, self.patch_size_px, self.height_px)


def _ownership(starts, size, extent):
    """Границы владения патчей: середина каждого перекрытия."""
    bounds = [0]
    for left, right in zip(starts, starts[1:]):
        bounds.append((left + size + right) // 2)
    bounds.append(extent)
    return list(zip(bounds, bounds[1:]))


def _axis_origins(extent, size, stride):
    origins = list(range(0, extent - size + 1, stride))
    if origins[-1] != extent - size:
        origins.append(extent - size)
    return tuple(origins)


def make_patch_grid(
    width, height, patch_size=PATCH_SIZE_PX, margin=PATCH_MARGIN_PX,
    overlap_mode=OVERLAP_PER_SIDE,
):
    if overlap_mode == OVERLAP_PER_SIDE:
        stride = patch_size - 2 * margin
    elif overlap_mode == OVERLAP_TOTAL:
        stride = patch_size - margin
    else:
        raise DomainError(f'overlap_mode: неизвестный режим {overlap_mode!r}')
    if margin < 0 or stride < 1:
        raise DomainError(
            f'patch_size={patch_size} и margin={margin} дают шаг {stride} < 1'
        )
    if width < patch_size or height < patch_size:
        raise DomainError(
            f'препарат {width}x{height} меньше одного патча {patch_size}px'
        )
    return PatchGrid(
        width, height, patch_size, margin,
        _axis_origins(width, patch_size, stride),
        _axis_origins(height, patch_size, stride),
    )


def cut_patches(density, grid):
    """Нарезать карту по сетке; обратная операция к ``stitch_predictions``."""
    size = grid.patch_size_px
    return {
        (x, y): DensityMap(
            density.values[y:y + size, x:x + size], scale=density.scale
        )
        for x, y in grid.origins
    }


def stitch_predictions(grid, patches):
    """Собрать карту активности; каждый пиксель берётся из патча-владельца.

    ``patches``: словарь ``{(x, y): DensityMap}`` или список в порядке
    ``grid.origins``.
    """
    if not isinstance(patches, dict):
        patches = list(patches)
        if len(patches) != len(grid.origins):
            raise DomainError(
                f'ожидается {len(grid.origins)} патчей, '
                f'получено {len(patches)}'
            )
        patches = dict(zip(grid.origins, patches))
    size = grid.patch_size_px
    stitched = np.zeros((grid.height_px, grid.width_px), dtype=np.float32)
    scales = set()
    for y, (top, bottom) in zip(grid.ys, grid.y_owners()):
        for x, (left, right) in zip(grid.xs, grid.x_owners()):
            patch = patches.get((x, y))
            if patch is None:
                raise DomainError(f'нет патча с началом ({x}, {y})')
            values = patch.values
            if values.shape != (size, size):
                raise DomainError(
                    f'патч ({x}, {y}) имеет размер {values.shape}, '
                    f'ожидалось {size}x{size}'
                )
            if np.any(values > 1):
                raise DomainError(
                    f'патч ({x}, {y}): значения должны лежать в [0, 1]'
                )
            scales.add(patch.scale)
            stitched[top:bottom, left:right] = values[
                top - y:bottom - y, left - x:right - x
            ]
    if len(scales) > 1:
        raise DomainError(f'патчи имеют разные масштабы {sorted(scales)}')
    logger.debug(
        'сшито %d патчей в карту %dx%d',
        len(grid.origins), grid.width_px, grid.height_px
    )
    return DensityMap(stitched, scale=scales.pop())


def render_gt_map(points, width, height, circle, scale=1, threads=1):
    """Залитые круги вокруг аннотаций на сетке размера ``(W//s, H//s)``.

    Пиксель карты равен 1, если центр соответствующего пикселя полного
    разрешения ``(j*scale + scale//2, i*scale + scale//2)`` лежит не дальше
    ``radius_px`` от какой-либо точки.
    """
    if scale < 1 or width < scale or height < scale:
        raise DomainError(
            f'нельзя построить карту {width}x{height} с масштабом {scale}'
        )
    half = scale // 2
    xs = np.arange(width // scale, dtype=np.int64) * scale + half
    ys = np.arange(height // scale, dtype=np.int64) * scale + half
    coords = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    radius = circle.radius_px
    bits = np.zeros((ys.size, xs.size), dtype=bool)

    def paint(band):
        top, bottom = band
        band_ys = ys[top:bottom]
        if band_ys.size == 0:
            return
        nearby = coords[
            (coords[:, 1] >= band_ys[0] - radius)
            & (coords[:, 1] <= band_ys[-1] + radius)
        ]
        for px, py in nearby:
            left, right = np.searchsorted(xs, (px - radius, px + radius + 1))
            if left == right:
                continue
            dx = xs[left:right] - px
            dy = band_ys - py
            bits[top:bottom, left:right] |= (
                dy[:, None] ** 2 + dx[None, :] ** 2 <= radius * radius
            )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        list(pool.map(paint, row_bands(ys.size, threads)))
    return BinaryMask(bits, scale=scale)
