from django.core.management.base import BaseCommand

from slides.annotations import parse_annotations, vertical_split
from slides.constants import (
    PATCH_SIZE_PX,
    SAMPLER_ANCHOR,
    SAMPLER_STRATEGIES,
    VAL_SIDE_BOTTOM,
    VAL_SIDES,
    VALIDATION_FRACTION,
)
from slides.forms import SUBSETS, SamplePatchesForm
from slides.mixins import PipelineCommandMixin
from slides.sampler import sample_tuples, write_tuples


class Command(PipelineCommandMixin, BaseCommand):
    help = 'Тройки обучающих патчей в CSV index,group,x,y,degraded.'
    form_class = SamplePatchesForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--annotations', required=True, help='CSV аннотаций препарата.'
        )
        parser.add_argument(
            '--out', required=True, help='Каталог для результатов.'
        )
        parser.add_argument(
            '--count', type=int, required=True, help='Число троек.'
        )
        parser.add_argument(
            '--patch-size', type=int, default=PATCH_SIZE_PX,
            help='Сторона патча, px (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--seed', type=int, default=0,
            help='Зерно генератора (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--strategy', choices=SAMPLER_STRATEGIES, default=SAMPLER_ANCHOR,
            help='Выбор патча вокруг аннотации или отбором '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--subset', choices=SUBSETS, default='all',
            help='Весь препарат или одна из частей вертикального разбиения '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--validation-fraction', type=float, default=VALIDATION_FRACTION,
            help='Доля высоты под валидацию (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--val-side', choices=VAL_SIDES, default=VAL_SIDE_BOTTOM,
            help='Край препарата под валидацию (по умолчанию: %(default)s).'
        )

    def handle(self, *args, **options):
        options = self.clean_options(options)
        annotations = parse_annotations(options['annotations'])
        if options['subset'] != 'all':
            train, val = vertical_split(
                annotations, options['validation_fraction'],
                options['val_side'],
            )
            annotations = train if options['subset'] == 'train' else val
        tuples = sample_tuples(
            annotations, options['patch_size'], options['count'],
            options['seed'], strategy=options['strategy'],
            threads=options['threads'],
        )
        out = self.output_dir(options['out'])
        write_tuples(tuples, out / 'patches.csv')
        self.emit({
            'tuples': len(tuples),
            'degraded': sum(
                draw.degraded for item in tuples for draw in item.draws
            ),
            'subset': options['subset'],
            'y_offset_px': annotations.y_offset_px,
            'height_px': annotations.height_px,
        })
