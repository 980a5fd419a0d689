import logging
from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from evaluation.forms import EvaluateForm
from evaluation.metrics import (
    MatchResult,
    binarize,
    f1,
    foreground_iou,
    match_detections,
    mean_iou,
    pearson_r,
)
from slides.annotations import agreed_mitoses, parse_annotations, read_points
from slides.constants import CIRCLE_RADIUS_PX, MAP_THRESHOLD
from slides.density import CircleSpec, render_gt_map
from slides.exceptions import DegenerateInputError
from slides.mixins import USAGE_ERROR, HpfArgumentsMixin, PipelineCommandMixin
from slides.proposal import estimated_count, is_high_grade, propose
from slides.raster import read_fras, read_pgm
from slides.reports import write_json

logger = logging.getLogger(__name__)

ALIGNED_INPUTS = ('pred_points', 'pred_map', 'slide')


def detection_record(match):
    return {
        'true_positives': match.true_positives,
        'false_positives': match.false_positives,
        'false_negatives': match.false_negatives,
        'precision': match.precision,
        'recall': match.recall,
        'f1': f1(match),
    }


def total_match(matches):
    return MatchResult(
        sum(match.true_positives for match in matches),
        sum(match.false_positives for match in matches),
        sum(match.false_negatives for match in matches),
    )


class Command(HpfArgumentsMixin, PipelineCommandMixin, BaseCommand):
    help = (
        'Метрики по препаратам: F1 детекций, mean IoU карт, корреляция '
        'оценки MC с эталоном в предложенном окне.'
    )
    form_class = EvaluateForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--gt', action='append', required=True,
            help='CSV эталонных аннотаций; повторяется для каждого препарата.'
        )
        parser.add_argument(
            '--pred-points', action='append', default=None,
            help='CSV x,y найденных митозов, в порядке --gt.'
        )
        parser.add_argument(
            '--pred-map', action='append', default=None,
            help='Предсказанная карта активности (FRAS), в порядке --gt.'
        )
        parser.add_argument(
            '--slide', action='append', default=None,
            help='Растр препарата (PGM) для оценки MC, в порядке --gt.'
        )
        parser.add_argument(
            '--radius', type=float, default=float(CIRCLE_RADIUS_PX),
            help='Радиус сопоставления детекций, px '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--circle-radius', type=int, default=CIRCLE_RADIUS_PX,
            help='Радиус эталонного круга для IoU и оценки MC, px '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--map-threshold', type=float, default=MAP_THRESHOLD,
            help='Порог бинаризации предсказанной карты '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--out', default=None,
            help='Каталог для metrics.json (по умолчанию: %(default)s).'
        )
        self.add_hpf_arguments(parser)
        self.add_mask_arguments(parser)

    def check_alignment(self, options):
        count = len(options['gt'])
        for name in ALIGNED_INPUTS:
            given = options[name] or []
            if given and len(given) != count:
                raise CommandError(
                    f'--{name.replace("_", "-")}: ожидается {count} '
                    f'значений по числу --gt, получено {len(given)}',
                    returncode=USAGE_ERROR,
                )
        if options['slide'] and not options['pred_map']:
            raise CommandError(
                '--slide: оценка MC требует --pred-map',
                returncode=USAGE_ERROR,
            )

    def segmentation(self, record, annotations, activity, options):
        circle = CircleSpec(options['circle_radius'])
        gt_mask = render_gt_map(
            agreed_mitoses(annotations), annotations.width_px,
            annotations.height_px, circle, scale=activity.scale,
            threads=options['threads'],
        )
        predicted = binarize(activity, options['map_threshold'])
        record['mean_iou'] = mean_iou(gt_mask, predicted)
        record['foreground_iou'] = foreground_iou(gt_mask, predicted)

    def counting(self, record, annotations, activity, slide, options):
        raster = read_pgm(slide, options['resolution'])
        proposal = propose(
            raster, activity, self.hpf_spec(options),
            self.mask_params(options), annotations=annotations,
            threads=options['threads'],
        )
        estimated = estimated_count(
            proposal, CircleSpec(options['circle_radius'])
        )
        record.update({
            'origin_x': proposal.origin_x,
            'origin_y': proposal.origin_y,
            'gt_mc': proposal.gt_mc,
            'estimated_mc': estimated,
            'high_grade_gt': is_high_grade(proposal.gt_mc),
            'high_grade_estimated': is_high_grade(estimated),
        })

    def evaluate_slide(self, index, options):
        gt_path = options['gt'][index]
        annotations = parse_annotations(gt_path)
        record = {'slide': Path(gt_path).stem}
        if options['pred_points']:
            match = match_detections(
                agreed_mitoses(annotations),
                read_points(options['pred_points'][index]),
                options['radius'],
            )
            record.update(detection_record(match))
            record['match'] = match
        if options['pred_map']:
            activity = read_fras(options['pred_map'][index])
            self.segmentation(record, annotations, activity, options)
            if options['slide']:
                self.counting(
                    record, annotations, activity, options['slide'][index],
                    options,
                )
        return record

    def correlation(self, per_slide):
        counted = [record for record in per_slide if 'gt_mc' in record]
        if len(counted) < 2:
            return None
        try:
            return pearson_r(
                [record['estimated_mc'] for record in counted],
                [record['gt_mc'] for record in counted],
            )
        except DegenerateInputError as exc:
            logger.warning('корреляция MC не вычислена: %s', exc)
            return None

    def handle(self, *args, **options):
        options = self.clean_options(options)
        self.check_alignment(options)
        per_slide = [
            self.evaluate_slide(index, options)
            for index in range(len(options['gt']))
        ]
        matches = [record.pop('match') for record in per_slide
                   if 'match' in record]
        ious = [record['mean_iou'] for record in per_slide
                if 'mean_iou' in record]
        report = {
            'f1': f1(total_match(matches)) if matches else None,
            'mean_iou': float(np.mean(ious)) if ious else None,
            'pearson_r': self.correlation(per_slide),
            'slides': len(per_slide),
            'per_slide': per_slide,
        }
        if options['out'] is not None:
            out = self.output_dir(options['out'])
            write_json(report, out / 'metrics.json')
        self.emit(report)
