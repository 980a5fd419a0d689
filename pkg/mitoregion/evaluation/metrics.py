"""Метрики качества: IoU-потеря, сопоставление детекций, корреляция MC."""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial import distance_matrix

from slides.annotations import as_array
from slides.exceptions import DegenerateInputError, DomainError
from slides.raster import BinaryMask

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledPair:
    ground_truth: np.ndarray
    prediction: np.ndarray

    def __post_init__(self):
        for name in ('ground_truth', 'prediction'):
            values = np.array(getattr(self, name), dtype=np.float64).ravel()
            if not np.all(np.isfinite(values)) or np.any(
                (values < 0) | (values > 1)
            ):
                raise DomainError(f'{name}: значения должны лежать в [0, 1]')
            values.setflags(write=False)
            object.__setattr__(self, name, values)
        if self.ground_truth.size != self.prediction.size:
            raise DomainError(
                f'длины ground_truth ({self.ground_truth.size}) и '
                f'prediction ({self.prediction.size}) различаются'
            )

    def swapped(self):
        return LabeledPair(self.prediction, self.ground_truth)


@dataclass(frozen=True)
class MatchResult:
    true_positives: int
    false_positives: int
    false_negatives: int
    pairs: Tuple[Tuple[int, int, float], ...] = ()

    @property
    def precision(self):
        found = self.true_positives + self.false_positives
        return self.true_positives / found if found else 0.0

    @property
    def recall(self):
        expected = self.true_positives + self.false_negatives
        return self.true_positives / expected if expected else 0.0


def _intersection_union(pair):
    x, y = pair.ground_truth, pair.prediction
    product = x * y
    intersection = float(product.sum())
    union = float((x + y - product).sum())
    if union == 0:
        raise DegenerateInputError(
            'IoU не определён: обе разметки нулевые'
        )
    return intersection, union


def iou_loss(pair):
    """Мягкая IoU-потеря: L = -I/U, лежит в [-1, 0]."""
    intersection, union = _intersection_union(pair)
    return 0.0 - intersection / union


def iou_loss_grad(pair):
    """Производная потери по каждому предсказанию."""
    intersection, union = _intersection_union(pair)
    x = pair.ground_truth
    return -(x * union - intersection * (1 - x)) / union ** 2


def dice(pair):
    x, y = pair.ground_truth, pair.prediction
    total = float(x.sum() + y.sum())
    if total == 0:
        raise DegenerateInputError(
            'коэффициент Дайса не определён: обе разметки нулевые'
        )
    return 2 * float((x * y).sum()) / total


def match_detections(gt, pred, radius_px):
    """Жадное взаимно однозначное сопоставление точек.

    Пары с расстоянием строго меньше ``radius_px`` перебираются по
    возрастанию ``(distance, gt_index, pred_index)``.
    """
    if not radius_px > 0:
        raise DomainError(f'radius_px должен быть > 0, получено {radius_px}')
    gt = as_array(gt).astype(np.float64)
    pred = as_array(pred).astype(np.float64)
    pairs = []
    if gt.shape[0] and pred.shape[0]:
        distances = distance_matrix(gt, pred)
        gt_index, pred_index = np.nonzero(distances < radius_px)
        close = distances[gt_index, pred_index]
        order = np.lexsort((pred_index, gt_index, close))
        used_gt, used_pred = set(), set()
        for k in order:
            i, j = int(gt_index[k]), int(pred_index[k])
            if i in used_gt or j in used_pred:
                continue
            used_gt.add(i)
            used_pred.add(j)
            pairs.append((i, j, float(close[k])))
    matched = len(pairs)
    logger.debug(
        'сопоставлено %d точек из %d эталонных и %d найденных',
        matched, gt.shape[0], pred.shape[0]
    )
    return MatchResult(
        matched, pred.shape[0] - matched, gt.shape[0] - matched, tuple(pairs)
    )


def f1(match):
    denominator = (
        2 * match.true_positives + match.false_positives
        + match.false_negatives
    )
    if denominator == 0:
        return 0.0
    return 2 * match.true_positives / denominator


def pearson_r(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size or a.size < 2:
        raise DomainError(
            'pearson_r: нужны два вектора одинаковой длины, не короче 2'
        )
    da = a - a.mean()
    db = b - b.mean()
    spread = float((da * da).sum()) * float((db * db).sum())
    if spread == 0:
        raise DegenerateInputError(
            'pearson_r не определён: у одного из векторов нулевая дисперсия'
        )
    r = float((da * db).sum()) / float(np.sqrt(spread))
    return min(1.0, max(-1.0, r))


def _class_iou(gt, pred):
    union = np.count_nonzero(gt | pred)
    if union == 0:
        return 1.0
    return np.count_nonzero(gt & pred) / union


def _aligned_bits(gt, pred):
    if gt.bits.shape != pred.bits.shape:
        raise DomainError(
            f'маски {gt.width_px}x{gt.height_px} и '
            f'{pred.width_px}x{pred.height_px} разного размера'
        )
    return gt.bits.astype(bool), pred.bits.astype(bool)


def mean_iou(gt, pred):
    """IoU, усреднённый по двум классам: митоз и фон."""
    gt_bits, pred_bits = _aligned_bits(gt, pred)
    return (
        _class_iou(gt_bits, pred_bits) + _class_iou(~gt_bits, ~pred_bits)
    ) / 2


def foreground_iou(gt, pred):
    gt_bits, pred_bits = _aligned_bits(gt, pred)
    return _class_iou(gt_bits, pred_bits)


def binarize(density, threshold):
    """Маска карты активности: 1, где значение не меньше порога."""
    return BinaryMask(density.values >= threshold, scale=density.scale)
