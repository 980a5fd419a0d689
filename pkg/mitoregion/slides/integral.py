"""Integral images (summed-area tables) with a zero first row and column."""
from dataclasses import dataclass

import numpy as np

from slides.exceptions import DomainError
from slides.raster import BinaryMask, DensityMap


@dataclass(frozen=True, eq=False)
class IntegralImage:
    table: np.ndarray

    @property
    def width_px(self):
        return self.table.shape[1] - 1

    @property
    def height_px(self):
        return self.table.shape[0] - 1

    @property
    def is_exact(self):
        return self.table.dtype.kind == 'i'


def integral(source):
    """Префиксные суммы: int64 для масок и счётчиков, float64 для карт."""
    if isinstance(source, BinaryMask):
        values = source.bits
    elif isinstance(source, DensityMap):
        values = source.values
    else:
        values = np.asarray(source)
    if values.dtype.kind in 'biu':
        dtype = np.int64
        assert values.size == 0 or int(values.max()) < 2 ** 31
    else:
        dtype = np.float64
    table = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=dtype)
    table[1:, 1:] = np.cumsum(np.cumsum(values, axis=0, dtype=dtype), axis=1)
    table.setflags(write=False)
    return IntegralImage(table)


def window_sum(ii, origin, size):
    x, y = origin
    w, h = size.width_px, size.height_px
    if x < 0 or y < 0 or x + w > ii.width_px or y + h > ii.height_px:
        raise DomainError(
            f'окно {w}x{h} в ({x}, {y}) выходит за пределы '
            f'{ii.width_px}x{ii.height_px}'
        )
    table = ii.table
    total = (
        table[y + h, x + w] - table[y, x + w]
        - table[y + h, x] + table[y, x]
    )
    return int(total) if ii.is_exact else float(total)


def window_sums(ii, size, rows=None):
    """Суммы окна для всех положений, где окно помещается целиком.

    ``rows`` ограничивает перебор полосой строк начала окна ``(top, bottom)``.
    """
    w, h = size.width_px, size.height_px
    if w > ii.width_px or h > ii.height_px:
        raise DomainError(
            f'окно {w}x{h} больше карты {ii.width_px}x{ii.height_px}'
        )
    top, bottom = rows if rows is not None else (0, ii.height_px - h + 1)
    table = ii.table
    upper = table[top:bottom]
    lower = table[top + h:bottom + h]
    return lower[:, w:] - upper[:, w:] - lower[:, :-w] + upper[:, :-w]


def row_bands(length, parts):
    """Разбить ``range(length)`` на не более чем ``parts`` непустых полос."""
    parts = max(1, min(parts, length))
    edges = [length * index // parts for index in range(parts + 1)]
    return list(zip(edges[:-1], edges[1:]))
