"""Детерминированный JSON: фиксированный порядок ключей, 9 значащих цифр."""
import json
import math

from django.conf import settings

from slides.raster import atomic_write


def _rounded(value, digits):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f'{value:.{digits}g}')
    if isinstance(value, dict):
        return {key: _rounded(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(item, digits) for item in value]
    return value


def dumps(record):
    digits = settings.SLIDES_JSON_DIGITS
    return json.dumps(
        _rounded(record, digits), indent=2, ensure_ascii=False
    ) + '\n'


def write_json(record, path):
    atomic_write(path, dumps(record).encode('utf-8'))


def proposal_record(proposal, quartile=None):
    return {
        'origin_x': proposal.origin_x,
        'origin_y': proposal.origin_y,
        'width_px': proposal.window.width_px,
        'height_px': proposal.window.height_px,
        'activity_score': proposal.activity_score,
        'gt_mc': proposal.gt_mc,
        'quartile': quartile.value if quartile is not None else None,
    }


def mask_record(report, window):
    return {
        'window_width_px': window.width_px,
        'window_height_px': window.height_px,
        'threshold': report.threshold,
        'tissue_fraction': report.tissue_fraction,
        'valid_origins': report.valid_origins,
        'scale': report.valid.scale,
        'kernel_width_px': report.window.width_px,
        'kernel_height_px': report.window.height_px,
    }
