import csv
import io
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from slides.constants import VAL_SIDE_BOTTOM, VAL_SIDE_TOP, VAL_SIDES
from slides.exceptions import AnnotationParseError, DomainError, FormatError
from slides.raster import atomic_write, read_meta, write_meta

logger = logging.getLogger(__name__)

ANNOTATION_HEADER = ('x', 'y', 'obs1', 'obs2')
POINTS_HEADER = ('x', 'y')


class Label(str, Enum):
    MITOSIS = 'mitosis'
    NON_MITOSIS = 'nonmitosis'
    UNCLASSIFIABLE = 'unclassifiable'


@dataclass(frozen=True)
class Annotation:
    x_px: int
    y_px: int
    label_obs1: Label
    label_obs2: Label

    @property
    def point(self):
        return (self.x_px, self.y_px)

    @property
    def is_agreed_mitosis(self):
        return self.label_obs1 is self.label_obs2 is Label.MITOSIS

    @property
    def is_hard_negative(self):
        return self.label_obs1 is not self.label_obs2 or (
            self.label_obs1 is Label.UNCLASSIFIABLE
        )


@dataclass(frozen=True)
class AnnotationSet:
    """Аннотации одного препарата.

    После вертикального разбиения набор описывает полосу
    ``[y_offset_px, y_offset_px + height_px)``, координаты остаются
    координатами всего препарата.
    """

    slide_id: str
    width_px: int
    height_px: int
    items: Tuple[Annotation, ...] = ()
    y_offset_px: int = 0

    def __post_init__(self):
        if self.width_px < 0 or self.height_px < 0:
            raise DomainError('width_px и height_px должны быть >= 0')
        object.__setattr__(self, 'items', tuple(self.items))
        seen = set()
        for index, item in enumerate(self.items):
            if not self.contains(item.x_px, item.y_px):
                raise DomainError(
                    f'аннотация #{index} ({item.x_px}, {item.y_px}) '
                    f'вне препарата {self.width_px}x{self.height_px}'
                )
            if item.point in seen:
                raise DomainError(
                    f'аннотация #{index}: повтор координат {item.point}'
                )
            seen.add(item.point)

    def contains(self, x, y):
        return 0 <= x < self.width_px and (
            self.y_offset_px <= y < self.y_offset_px + self.height_px
        )

    def __len__(self):
        return len(self.items)


def _parse_label(token, row, column):
    try:
        return Label(token.strip())
    except ValueError:
        raise AnnotationParseError(
            row,
            f'{column}: неизвестная метка {token!r}, допустимы '
            f'{", ".join(label.value for label in Label)}'
        ) from None


def _parse_coordinate(token, row, column):
    try:
        value = int(token.strip())
    except ValueError:
        raise AnnotationParseError(
            row, f'{column}: ожидается целое число, получено {token!r}'
        ) from None
    if value < 0:
        raise AnnotationParseError(row, f'{column}: координата {value} < 0')
    return value


def _read_rows(path, header):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except UnicodeDecodeError as exc:
        raise FormatError(f'{path}: ожидается UTF-8 ({exc})') from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(cell.strip() for cell in rows[0]) != header:
        raise AnnotationParseError(
            1, f'ожидается заголовок {",".join(header)}'
        )
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise AnnotationParseError(
                number,
                f'ожидается {len(header)} столбца, получено {len(row)}'
            )
        yield number, row


def _slide_size(path, width_px, height_px):
    meta = read_meta(path)
    width_px = meta.get('width_px') if width_px is None else width_px
    height_px = meta.get('height_px') if height_px is None else height_px
    if width_px is None or height_px is None:
        raise FormatError(
            f'{path}: размеры препарата не заданы '
            '(width_px/height_px в sidecar-файле)'
        )
    return int(width_px), int(height_px)


def parse_annotations(path, width_px=None, height_px=None, slide_id=None):
    width_px, height_px = _slide_size(path, width_px, height_px)
    items = []
    seen = {}
    for number, (x, y, obs1, obs2) in _read_rows(path, ANNOTATION_HEADER):
        item = Annotation(
            _parse_coordinate(x, number, 'x'),
            _parse_coordinate(y, number, 'y'),
            _parse_label(obs1, number, 'obs1'),
            _parse_label(obs2, number, 'obs2'),
        )
        if item.x_px >= width_px or item.y_px >= height_px:
            raise AnnotationParseError(
                number,
                f'координата {item.point} вне препарата '
                f'{width_px}x{height_px}'
            )
        if item.point in seen:
            raise AnnotationParseError(
                number,
                f'координата {item.point} повторяет строку {seen[item.point]}'
            )
        seen[item.point] = number
        items.append(item)
    logger.debug('%s: прочитано аннотаций: %d', path, len(items))
    return AnnotationSet(
        slide_id or Path(path).stem, width_px, height_px, tuple(items)
    )


def write_annotations(annotations, path):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(ANNOTATION_HEADER)
    for item in annotations.items:
        writer.writerow((
            item.x_px, item.y_px, item.label_obs1.value, item.label_obs2.value
        ))
    atomic_write(path, buffer.getvalue().encode('utf-8'))
    write_meta(
        path, width_px=annotations.width_px, height_px=annotations.height_px
    )


def read_points(path):
    """Прочитать точки детектора из CSV ``x,y``."""
    return [
        (_parse_coordinate(x, number, 'x'), _parse_coordinate(y, number, 'y'))
        for number, (x, y) in _read_rows(path, POINTS_HEADER)
    ]


def write_points(points, path):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(POINTS_HEADER)
    writer.writerows((int(x), int(y)) for x, y in points)
    atomic_write(path, buffer.getvalue().encode('utf-8'))


def agreed_mitoses(annotations):
    """Митозы, с которыми согласны оба эксперта, в исходном порядке."""
    return [item.point for item in annotations.items if item.is_agreed_mitosis]


def hard_negative_candidates(annotations):
    return [item.point for item in annotations.items if item.is_hard_negative]


def as_array(points):
    return np.asarray(points, dtype=np.int64).reshape(-1, 2)


def window_count(points, origin, size):
    """Число точек в полуоткрытом окне [x, x+w) x [y, y+h)."""
    coords = as_array(points)
    x, y = origin
    inside = (
        (coords[:, 0] >= x) & (coords[:, 0] < x + size.width_px)
        & (coords[:, 1] >= y) & (coords[:, 1] < y + size.height_px)
    )
    return int(np.count_nonzero(inside))


def vertical_split(
    annotations, validation_fraction, side: Optional[str] = VAL_SIDE_BOTTOM
):
    if not 0 < validation_fraction < 1:
        raise DomainError(
            'validation_fraction должна быть в (0, 1), '
            f'получено {validation_fraction}'
        )
    if side not in VAL_SIDES:
        raise DomainError(f'side: ожидается одно из {VAL_SIDES}')
    top = annotations.y_offset_px
    height = annotations.height_px
    kept = math.floor(height * (1 - validation_fraction))
    if side == VAL_SIDE_TOP:
        kept = height - kept
    cut = top + kept
    upper = tuple(item for item in annotations.items if item.y_px < cut)
    lower = tuple(item for item in annotations.items if item.y_px >= cut)
    upper_set = replace(annotations, items=upper, height_px=kept)
    lower_set = replace(
        annotations, items=lower, height_px=height - kept, y_offset_px=cut
    )
    if side == VAL_SIDE_BOTTOM:
        return upper_set, lower_set
    return lower_set, upper_set
