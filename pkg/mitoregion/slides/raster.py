"""Grid types shared by the pipeline and their on-disk formats.

Rasters and masks are stored as binary PGM (P5), activity maps as FRAS:
an ASCII header ``FRAS\\n<w> <h> <scale>\\n`` followed by little-endian
float32 values in row-major order. Resolution and scale travel in a
``<name>.meta.json`` sidecar next to the file.
"""
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from django.conf import settings

from slides.exceptions import DomainError, FormatError, UnsupportedFormatError

logger = logging.getLogger(__name__)

PGM_HEADER = re.compile(rb'P5\n([1-9]\d*) ([1-9]\d*)\n([1-9]\d*)\n')
FRAS_HEADER = re.compile(rb'FRAS\n([1-9]\d*) ([1-9]\d*) ([1-9]\d*)\n')
FRAS_DTYPE = np.dtype('<f4')
MASK_ON = 255


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype, order='C', copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SlideRaster:
    pixels: np.ndarray
    resolution_um_per_px: float

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim not in (2, 3) or (
            pixels.ndim == 3 and pixels.shape[2] != 3
        ):
            raise DomainError(
                'pixels: ожидается сетка HxW или HxWx3, '
                f'получено {pixels.shape}'
            )
        if pixels.dtype != np.uint8:
            raise DomainError(
                f'pixels: ожидается uint8, получено {pixels.dtype}'
            )
        if not self.resolution_um_per_px > 0:
            raise DomainError(
                'resolution_um_per_px должно быть положительным, '
                f'получено {self.resolution_um_per_px}'
            )
        object.__setattr__(self, 'pixels', _frozen(pixels, np.uint8))
        object.__setattr__(
            self, 'resolution_um_per_px', float(self.resolution_um_per_px)
        )

    @property
    def width_px(self):
        return self.pixels.shape[1]

    @property
    def height_px(self):
        return self.pixels.shape[0]

    @property
    def channels(self):
        return 1 if self.pixels.ndim == 2 else 3

    def __eq__(self, other):
        if not isinstance(other, SlideRaster):
            return NotImplemented
        return (
            self.resolution_um_per_px == other.resolution_um_per_px
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True, eq=False)
class DensityMap:
    values: np.ndarray
    scale: int = 1

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or min(values.shape) < 1:
            raise DomainError(
                'values: ожидается непустая сетка HxW, '
                f'получено {values.shape}'
            )
        values = _frozen(values, np.float32)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError(
                'values: значения карты активности должны быть '
                'конечными и неотрицательными'
            )
        _check_scale(self.scale)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'scale', int(self.scale))

    @property
    def width_px(self):
        return self.values.shape[1]

    @property
    def height_px(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DensityMap):
            return NotImplemented
        return self.scale == other.scale and np.array_equal(
            self.values.view(np.uint32), other.values.view(np.uint32)
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray
    scale: int = 1

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise DomainError(
                f'bits: ожидается сетка HxW, получено {bits.shape}'
            )
        if bits.dtype != bool and np.any((bits != 0) & (bits != 1)):
            raise DomainError('bits: маска может содержать только 0 и 1')
        _check_scale(self.scale)
        object.__setattr__(self, 'bits', _frozen(bits, np.uint8))
        object.__setattr__(self, 'scale', int(self.scale))

    @property
    def width_px(self):
        return self.bits.shape[1]

    @property
    def height_px(self):
        return self.bits.shape[0]

    def count(self):
        return int(np.count_nonzero(self.bits))

    def to_density(self):
        return DensityMap(self.bits.astype(np.float32), scale=self.scale)

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.scale == other.scale and np.array_equal(
            self.bits, other.bits
        )


def _check_scale(scale):
    if int(scale) != scale or scale < 1:
        raise DomainError(
            f'scale должен быть целым числом >= 1, получено {scale}'
        )


def downsample(array, scale):
    """Выборка центральных пикселей (j*s + s//2, i*s + s//2).

    Результат имеет размер (H//s, W//s).
    """
    _check_scale(scale)
    height, width = array.shape[:2]
    if height < scale or width < scale:
        raise DomainError(
            f'изображение {width}x{height} меньше коэффициента '
            f'уменьшения {scale}'
        )
    half = scale // 2
    return array[half::scale, half::scale][:height // scale, :width // scale]


def atomic_write(path, payload):
    """Записать файл целиком через временный файл и переименование."""
    path = Path(path)
    handle, temp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp'
    )
    try:
        with os.fdopen(handle, 'wb') as stream:
            stream.write(payload)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


def meta_path(path):
    path = Path(path)
    return path.with_name(f'{path.stem}.meta.json')


def read_meta(path):
    """Прочитать sidecar ``<name>.meta.json``; пустой словарь, если его нет."""
    sidecar = meta_path(path)
    if not sidecar.exists():
        return {}
    try:
        meta = json.loads(sidecar.read_text(encoding='utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f'{sidecar}: некорректный JSON ({exc})') from exc
    if not isinstance(meta, dict):
        raise FormatError(f'{sidecar}: ожидается JSON-объект')
    return meta


def write_meta(path, **fields):
    payload = json.dumps(fields, indent=2, ensure_ascii=False) + '\n'
    atomic_write(meta_path(path), payload.encode('utf-8'))


def _parse_header(pattern, data, path, kind):
    match = pattern.match(data)
    if match is None:
        raise FormatError(f'{path}: заголовок {kind} не распознан')
    return match


def _decode_pgm(path):
    data = Path(path).read_bytes()
    match = _parse_header(PGM_HEADER, data, path, 'PGM (P5)')
    width, height, maxval = (int(group) for group in match.groups())
    if maxval != 255:
        raise FormatError(
            f'{path}: maxval={maxval}, поддерживается только 255'
        )
    if width < 1 or height < 1:
        raise FormatError(f'{path}: width/height должны быть >= 1')
    payload = data[match.end():]
    if len(payload) != width * height:
        raise FormatError(
            f'{path}: payload содержит {len(payload)} байт, '
            f'ожидалось {width * height} ({width}x{height})'
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def _encode_pgm(pixels):
    height, width = pixels.shape
    header = b'P5\n%d %d\n255\n' % (width, height)
    return header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def read_pgm(path, resolution_um_per_px: Optional[float] = None):
    """Прочитать серый растр; разрешение берётся из аргумента или sidecar."""
    pixels = _decode_pgm(path)
    if resolution_um_per_px is None:
        resolution_um_per_px = read_meta(path).get('resolution_um_per_px')
    if resolution_um_per_px is None:
        resolution_um_per_px = settings.SLIDES_DEFAULT_RESOLUTION
        logger.warning(
            '%s: разрешение не задано, используется %s мкм/px',
            path, resolution_um_per_px
        )
    return SlideRaster(pixels, resolution_um_per_px)


def write_pgm(raster, path):
    if raster.channels != 1:
        raise UnsupportedFormatError(
            f'{path}: PGM хранит только один канал, у растра '
            f'channels={raster.channels}'
        )
    atomic_write(path, _encode_pgm(raster.pixels))


def read_mask(path, scale: Optional[int] = None):
    pixels = _decode_pgm(path)
    extra = np.setdiff1d(np.unique(pixels), (0, MASK_ON))
    if extra.size:
        raise FormatError(
            f'{path}: маска содержит значения {extra.tolist()}, '
            'допустимы только 0 и 255'
        )
    if scale is None:
        scale = read_meta(path).get('scale', 1)
    return BinaryMask(pixels == MASK_ON, scale=scale)


def write_mask(mask, path):
    atomic_write(path, _encode_pgm(mask.bits * MASK_ON))


def read_fras(path):
    data = Path(path).read_bytes()
    match = _parse_header(FRAS_HEADER, data, path, 'FRAS')
    width, height, scale = (int(group) for group in match.groups())
    if width < 1 or height < 1 or scale < 1:
        raise FormatError(f'{path}: width, height, scale должны быть >= 1')
    payload = data[match.end():]
    expected = width * height * FRAS_DTYPE.itemsize
    if len(payload) != expected:
        raise FormatError(
            f'{path}: payload содержит {len(payload)} байт, '
            f'ожидалось {expected} ({width}x{height} float32)'
        )
    values = np.frombuffer(payload, dtype=FRAS_DTYPE).reshape(height, width)
    try:
        return DensityMap(values.astype(np.float32), scale=scale)
    except DomainError as exc:
        raise FormatError(f'{path}: values: {exc}') from exc


def write_fras(density, path):
    header = b'FRAS\n%d %d %d\n' % (
        density.width_px, density.height_px, density.scale
    )
    atomic_write(path, header + density.values.astype(FRAS_DTYPE).tobytes())
