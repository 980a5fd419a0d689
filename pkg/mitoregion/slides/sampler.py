"""Тройки обучающих патчей: митоз, трудный негатив, случайный патч."""
import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

from slides.annotations import (
    agreed_mitoses,
    as_array,
    hard_negative_candidates,
)
from slides.constants import (
    REJECTION_ATTEMPTS,
    SAMPLER_ANCHOR,
    SAMPLER_REJECTION,
    SAMPLER_STRATEGIES,
)
from slides.exceptions import DomainError
from slides.raster import atomic_write
from slides.rng import stream

logger = logging.getLogger(__name__)

TUPLES_HEADER = ('index', 'group', 'x', 'y', 'degraded')


class Group(IntEnum):
    MITOSIS = 1
    HARD_NEGATIVE = 2
    RANDOM = 3


@dataclass(frozen=True)
class PatchDraw:
    group: Group
    x: int
    y: int
    degraded: bool = False


@dataclass(frozen=True)
class PatchTuple:
    index: int
    draws: Tuple[PatchDraw, PatchDraw, PatchDraw]
    patch_size_px: int
    seed: int

    @property
    def group1(self):
        return self.draws[0]

    @property
    def group2(self):
        return self.draws[1]

    @property
    def group3(self):
        return self.draws[2]


class _Slide:

    def __init__(self, annotations, patch_size):
        self.max_x = annotations.width_px - patch_size
        self.min_y = annotations.y_offset_px
        self.max_y = self.min_y + annotations.height_px - patch_size
        self.patch_size = patch_size

    def uniform(self, rng):
        return (
            int(rng.integers(0, self.max_x + 1)),
            int(rng.integers(self.min_y, self.max_y + 1)),
        )

    def around(self, rng, point):
        """Равномерно среди начал патчей, содержащих ``point``."""
        x, y = (int(v) for v in point)
        size = self.patch_size
        return (
            int(rng.integers(max(0, x - size + 1), min(x, self.max_x) + 1)),
            int(rng.integers(
                max(self.min_y, y - size + 1), min(y, self.max_y) + 1
            )),
        )

    def covers_any(self, origin, pool):
        x, y = origin
        inside = (
            (pool[:, 0] >= x) & (pool[:, 0] < x + self.patch_size)
            & (pool[:, 1] >= y) & (pool[:, 1] < y + self.patch_size)
        )
        return bool(inside.any())


def _draw(slide, pool, group, rng, strategy):
    if pool.shape[0] == 0:
        x, y = slide.uniform(rng)
        return PatchDraw(group, x, y, degraded=True)
    if strategy == SAMPLER_REJECTION:
        for _ in range(REJECTION_ATTEMPTS):
            origin = slide.uniform(rng)
            if slide.covers_any(origin, pool):
                return PatchDraw(group, *origin)
        logger.warning(
            'группа %d: %d попыток отбора без успеха, выбор через аннотацию',
            group, REJECTION_ATTEMPTS
        )
    anchor = pool[int(rng.integers(0, pool.shape[0]))]
    return PatchDraw(group, *slide.around(rng, anchor))


def sample_tuples(
    annotations, patch_size, count, seed, strategy=SAMPLER_ANCHOR, threads=1
):
    if strategy not in SAMPLER_STRATEGIES:
        raise DomainError(f'strategy: ожидается одно из {SAMPLER_STRATEGIES}')
    if patch_size < 1 or count < 0:
        raise DomainError('patch_size должен быть >= 1, count >= 0')
    if (
        annotations.width_px < patch_size
        or annotations.height_px < patch_size
    ):
        raise DomainError(
            f'препарат {annotations.width_px}x{annotations.height_px} '
            f'меньше патча {patch_size}px'
        )
    slide = _Slide(annotations, patch_size)
    pools = {
        Group.MITOSIS: as_array(agreed_mitoses(annotations)),
        Group.HARD_NEGATIVE: as_array(hard_negative_candidates(annotations)),
        Group.RANDOM: as_array([]),
    }
    for group in (Group.MITOSIS, Group.HARD_NEGATIVE):
        if pools[group].shape[0] == 0:
            logger.warning(
                'группа %d пуста: патчи берутся случайно и помечаются '
                'как degraded', group
            )

    def make_tuple(index):
        draws = []
        for group in Group:
            rng = stream(seed, index, group)
            if group is Group.RANDOM:
                draws.append(PatchDraw(group, *slide.uniform(rng)))
            else:
                draws.append(_draw(slide, pools[group], group, rng, strategy))
        return PatchTuple(index, tuple(draws), patch_size, seed)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(make_tuple, range(count)))


def tuples_to_rows(tuples):
    """Строки CSV ``index,group,x,y,degraded``."""
    for patch_tuple in tuples:
        for draw in patch_tuple.draws:
            yield (
                patch_tuple.index, int(draw.group), draw.x, draw.y,
                int(draw.degraded),
            )


def write_tuples(tuples, path):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(TUPLES_HEADER)
    writer.writerows(tuples_to_rows(tuples))
    atomic_write(path, buffer.getvalue().encode('utf-8'))
