from django.core.management.base import BaseCommand

from slides.annotations import agreed_mitoses, parse_annotations
from slides.constants import CIRCLE_RADIUS_PX, MASK_DOWNSAMPLE
from slides.density import CircleSpec, render_gt_map
from slides.forms import GtMapForm
from slides.mixins import PipelineCommandMixin
from slides.raster import write_fras, write_mask, write_meta


class Command(PipelineCommandMixin, BaseCommand):
    help = 'Эталонная карта активности: круги вокруг согласованных митозов.'
    form_class = GtMapForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--annotations', required=True,
            help='CSV аннотаций с sidecar-файлом размеров препарата.'
        )
        parser.add_argument(
            '--out', required=True, help='Каталог для результатов.'
        )
        parser.add_argument(
            '--radius', type=int, default=CIRCLE_RADIUS_PX,
            help='Радиус круга, px (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--scale', type=int, default=MASK_DOWNSAMPLE,
            help='Масштаб карты (по умолчанию: %(default)s).'
        )

    def handle(self, *args, **options):
        options = self.clean_options(options)
        annotations = parse_annotations(options['annotations'])
        out = self.output_dir(options['out'])
        points = agreed_mitoses(annotations)
        mask = render_gt_map(
            points, annotations.width_px, annotations.height_px,
            CircleSpec(options['radius']), scale=options['scale'],
            threads=options['threads'],
        )
        write_fras(mask.to_density(), out / 'gt.fras')
        write_meta(out / 'gt.fras', scale=mask.scale)
        write_mask(mask, out / 'gt_mask.pgm')
        write_meta(out / 'gt_mask.pgm', scale=mask.scale)
        self.emit({
            'width_px': mask.width_px,
            'height_px': mask.height_px,
            'scale': mask.scale,
            'agreed_mitoses': len(points),
            'foreground_px': mask.count(),
        })
