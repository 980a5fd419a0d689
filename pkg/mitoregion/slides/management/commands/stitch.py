from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from django.core.management.base import BaseCommand

from slides.constants import (
    OVERLAP_MODES,
    OVERLAP_PER_SIDE,
    PATCH_FILE_TEMPLATE,
    PATCH_MARGIN_PX,
    PATCH_SIZE_PX,
)
from slides.density import make_patch_grid, stitch_predictions
from slides.forms import StitchForm
from slides.mixins import PipelineCommandMixin
from slides.raster import read_fras, write_fras, write_meta


class Command(PipelineCommandMixin, BaseCommand):
    help = (
        'Сборка карты активности из предсказаний по патчам '
        f'({PATCH_FILE_TEMPLATE}).'
    )
    form_class = StitchForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--patches', required=True, help='Каталог с FRAS-патчами.'
        )
        parser.add_argument(
            '--out', required=True, help='Каталог для результатов.'
        )
        parser.add_argument(
            '--width', type=int, required=True,
            help='Ширина собранной карты, px.'
        )
        parser.add_argument(
            '--height', type=int, required=True,
            help='Высота собранной карты, px.'
        )
        parser.add_argument(
            '--patch-size', type=int, default=PATCH_SIZE_PX,
            help='Сторона патча, px (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--margin', type=int, default=PATCH_MARGIN_PX,
            help='Отбрасываемое поле патча, px (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--overlap-mode', choices=OVERLAP_MODES, default=OVERLAP_PER_SIDE,
            help='Поле с каждой стороны или суммарное перекрытие '
                 '(по умолчанию: %(default)s).'
        )

    def handle(self, *args, **options):
        options = self.clean_options(options)
        grid = make_patch_grid(
            options['width'], options['height'], options['patch_size'],
            options['margin'], options['overlap_mode'],
        )
        folder = Path(options['patches'])
        paths = [
            folder / PATCH_FILE_TEMPLATE.format(x=x, y=y)
            for x, y in grid.origins
        ]
        with ThreadPoolExecutor(max_workers=options['threads']) as pool:
            patches = list(pool.map(read_fras, paths))
        activity = stitch_predictions(grid, patches)
        out = self.output_dir(options['out'])
        write_fras(activity, out / 'activity.fras')
        write_meta(out / 'activity.fras', scale=activity.scale)
        self.emit({
            'width_px': activity.width_px,
            'height_px': activity.height_px,
            'scale': activity.scale,
            'patches': len(paths),
        })
