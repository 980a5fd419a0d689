from django.core.management.base import BaseCommand

from slides.forms import MaskParamsForm
from slides.geometry import hpf_window_pixels
from slides.maskgen import compute_valid_mask
from slides.mixins import HpfArgumentsMixin, PipelineCommandMixin
from slides.raster import read_pgm, write_mask, write_meta
from slides.reports import mask_record, write_json


class Command(HpfArgumentsMixin, PipelineCommandMixin, BaseCommand):
    help = 'Маска допустимых положений окна 10 HPF.'
    form_class = MaskParamsForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--slide', required=True, help='Растр препарата (PGM).'
        )
        parser.add_argument(
            '--out', required=True, help='Каталог для результатов.'
        )
        self.add_hpf_arguments(parser)
        self.add_mask_arguments(parser)

    def handle(self, *args, **options):
        options = self.clean_options(options)
        spec = self.hpf_spec(options)
        params = self.mask_params(options)
        raster = read_pgm(options['slide'], options['resolution'])
        out = self.output_dir(options['out'])
        window = hpf_window_pixels(spec, raster.resolution_um_per_px)
        report = compute_valid_mask(raster, window, params)
        write_mask(report.valid, out / 'valid_mask.pgm')
        write_meta(
            out / 'valid_mask.pgm',
            resolution_um_per_px=raster.resolution_um_per_px,
            scale=report.valid.scale,
        )
        record = mask_record(report, window)
        write_json(record, out / 'mask.json')
        self.emit(record)
