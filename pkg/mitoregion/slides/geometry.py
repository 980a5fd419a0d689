"""Размер окна 10 полей зрения (HPF) в пикселях сканера."""
import math
from dataclasses import dataclass

from slides.constants import HPF_AREA_MM2, HPF_ASPECT, HPF_FIELDS
from slides.exceptions import DomainError

UM_PER_MM = 1000


@dataclass(frozen=True)
class HpfSpec:
    area_mm2: float = HPF_AREA_MM2
    n_fields: int = HPF_FIELDS
    aspect_w_over_h: float = HPF_ASPECT

    def __post_init__(self):
        if not self.area_mm2 > 0:
            raise DomainError(
                f'area_mm2 должна быть положительной, получено {self.area_mm2}'
            )
        if int(self.n_fields) != self.n_fields or self.n_fields < 1:
            raise DomainError(
                f'n_fields должно быть целым >= 1, получено {self.n_fields}'
            )
        if not self.aspect_w_over_h > 0:
            raise DomainError(
                'aspect_w_over_h должно быть положительным, '
                f'получено {self.aspect_w_over_h}'
            )


@dataclass(frozen=True)
class WindowSize:
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise DomainError(
                'размер окна должен быть не меньше 1x1, '
                f'получено {self.width_px}x{self.height_px}'
            )

    @property
    def area_px(self):
        return self.width_px * self.height_px


def round_half_away(value):
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def hpf_window_pixels(spec, resolution_um_per_px):
    if not resolution_um_per_px > 0:
        raise DomainError(
            'resolution_um_per_px должно быть положительным, '
            f'получено {resolution_um_per_px}'
        )
    area = spec.n_fields * spec.area_mm2
    width = math.sqrt(area * spec.aspect_w_over_h)
    height = math.sqrt(area / spec.aspect_w_over_h)
    return WindowSize(
        max(1, round_half_away(width / resolution_um_per_px * UM_PER_MM)),
        max(1, round_half_away(height / resolution_um_per_px * UM_PER_MM)),
    )


def window_at_scale(window, scale):
    """Окно на уменьшенной в ``scale`` раз карте, не меньше 1x1."""
    if scale < 1:
        raise DomainError(f'scale должен быть >= 1, получено {scale}')

    def shrink(size):
        return max(1, (2 * size + scale) // (2 * scale))

    return WindowSize(shrink(window.width_px), shrink(window.height_px))
