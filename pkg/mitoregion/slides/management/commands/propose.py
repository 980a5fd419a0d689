import argparse
import logging
import math

from django.conf import settings
from django.core.management.base import BaseCommand

from slides.annotations import agreed_mitoses, parse_annotations
from slides.exceptions import DomainError, EmptyMaskError
from slides.forms import MaskParamsForm
from slides.geometry import hpf_window_pixels
from slides.maskgen import valid_mask
from slides.mixins import HpfArgumentsMixin, PipelineCommandMixin
from slides.proposal import (
    mc_distribution,
    propose,
    quartile_placement,
    render_overlay,
)
from slides.raster import (
    read_fras,
    read_mask,
    read_pgm,
    write_meta,
    write_pgm,
)
from slides.reports import proposal_record, write_json

logger = logging.getLogger(__name__)


def mc_stride(scale):
    """Шаг сетки распределения MC, кратный масштабу маски."""
    return math.ceil(settings.SLIDES_MC_STRIDE_PX / scale) * scale


class Command(HpfArgumentsMixin, PipelineCommandMixin, BaseCommand):
    help = 'Окно 10 HPF с максимальной митотической активностью.'
    form_class = MaskParamsForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--slide', required=True, help='Растр препарата (PGM).'
        )
        parser.add_argument(
            '--activity', required=True, help='Карта активности (FRAS).'
        )
        parser.add_argument(
            '--annotations', default=None,
            help='CSV аннотаций для подсчёта MC в окне '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--valid-mask', default=None,
            help='Готовая маска допустимых положений (PGM из mask); '
                 'иначе строится по препарату (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--out', required=True, help='Каталог для результатов.'
        )
        parser.add_argument(
            '--overlay', action=argparse.BooleanOptionalAction, default=True,
            help='Сохранить overlay.pgm с рамкой окна '
                 '(по умолчанию: %(default)s).'
        )
        self.add_hpf_arguments(parser)
        self.add_mask_arguments(parser)

    def placement(self, annotations, valid, window, proposal):
        slide_size = (annotations.width_px, annotations.height_px)
        try:
            distribution = mc_distribution(
                agreed_mitoses(annotations), valid, window,
                mc_stride(valid.scale), slide_size=slide_size,
            )
        except EmptyMaskError:
            logger.warning(
                'на сетке с шагом %d нет допустимых окон, квартиль не '
                'определён', mc_stride(valid.scale)
            )
            return None
        quartile = quartile_placement(proposal.gt_mc, distribution)
        logger.info(
            'MC окна %d, квартили %.1f/%.1f/%.1f: %s', proposal.gt_mc,
            distribution.q1, distribution.q2, distribution.q3, quartile.value,
        )
        return quartile

    def load_valid_mask(self, options, raster, window, params):
        if options['valid_mask'] is None:
            return valid_mask(raster, window, params)
        valid = read_mask(options['valid_mask'])
        if valid.scale != params.downsample:
            raise DomainError(
                f'масштаб маски ({valid.scale}) не совпадает '
                f'с --downsample ({params.downsample})'
            )
        return valid

    def handle(self, *args, **options):
        options = self.clean_options(options)
        spec = self.hpf_spec(options)
        params = self.mask_params(options)
        raster = read_pgm(options['slide'], options['resolution'])
        activity = read_fras(options['activity'])
        if activity.scale != params.downsample:
            raise DomainError(
                f'масштаб карты активности ({activity.scale}) не совпадает '
                f'с --downsample ({params.downsample})'
            )
        annotations = None
        if options['annotations'] is not None:
            annotations = parse_annotations(
                options['annotations'], raster.width_px, raster.height_px
            )
        out = self.output_dir(options['out'])
        window = hpf_window_pixels(spec, raster.resolution_um_per_px)
        valid = self.load_valid_mask(options, raster, window, params)
        proposal = propose(
            raster, activity, spec, params, annotations=annotations,
            valid=valid, threads=options['threads'],
        )
        quartile = None
        if annotations is not None:
            quartile = self.placement(annotations, valid, window, proposal)
        record = proposal_record(proposal, quartile)
        write_json(record, out / 'proposal.json')
        if options['overlay']:
            overlay = render_overlay(raster, proposal, params.downsample)
            write_pgm(overlay, out / 'overlay.pgm')
            write_meta(
                out / 'overlay.pgm',
                resolution_um_per_px=overlay.resolution_um_per_px,
                scale=params.downsample,
            )
        self.emit(record)
