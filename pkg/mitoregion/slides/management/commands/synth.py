import argparse
import json
from pathlib import Path

from django.core.management.base import BaseCommand

from slides.annotations import (
    agreed_mitoses,
    hard_negative_candidates,
    write_annotations,
)
from slides.constants import (
    CIRCLE_RADIUS_PX,
    MASK_DOWNSAMPLE,
    SYNTH_FN_RATE,
)
from slides.density import CircleSpec, render_gt_map
from slides.exceptions import FormatError
from slides.forms import SynthForm
from slides.mixins import PipelineCommandMixin
from slides.raster import write_fras, write_meta, write_pgm
from slides.reports import write_json
from slides.synth import (
    SynthSpec,
    corrupt_map,
    default_blur,
    generate,
    matched_fp_rate,
)


def load_spec(path):
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f'{path}: некорректный JSON ({exc})') from exc
    try:
        return SynthSpec.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(
            f'{path}: некорректное описание препарата ({exc!r})'
        ) from exc


class Command(PipelineCommandMixin, BaseCommand):
    help = (
        'Синтетический препарат: растр, аннотации и эталонная карта '
        'активности по JSON-описанию.'
    )
    form_class = SynthForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--spec', required=True, help='JSON-описание препарата.'
        )
        parser.add_argument(
            '--out', required=True, help='Каталог для результатов.'
        )
        parser.add_argument(
            '--radius', type=int, default=CIRCLE_RADIUS_PX,
            help='Радиус круга вокруг митоза, px (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--scale', type=int, default=MASK_DOWNSAMPLE,
            help='Масштаб эталонной карты (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--predicted', action=argparse.BooleanOptionalAction,
            default=False,
            help='Добавить искажённую карту «детектора» '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--fn-rate', type=float, default=SYNTH_FN_RATE,
            help='Вероятность потерять митоз (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--fp-rate', type=float, default=None,
            help='Ложные круги на мегапиксель ткани; без значения равна '
                 'плотности митозов (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--blur', type=int, default=None,
            help='Радиус размытия в пикселях карты; без значения 8 px '
                 'полного разрешения, пересчитанные по --scale, не меньше 1 '
                 '(по умолчанию: %(default)s).'
        )

    def handle(self, *args, **options):
        options = self.clean_options(options)
        spec = load_spec(options['spec'])
        out = self.output_dir(options['out'])
        raster, annotations = generate(spec)
        circle = CircleSpec(options['radius'])
        scale = options['scale']
        gt = render_gt_map(
            agreed_mitoses(annotations), spec.width, spec.height, circle,
            scale=scale, threads=options['threads'],
        ).to_density()

        write_pgm(raster, out / 'slide.pgm')
        write_meta(
            out / 'slide.pgm',
            resolution_um_per_px=raster.resolution_um_per_px, scale=1,
        )
        write_annotations(annotations, out / 'annotations.csv')
        write_fras(gt, out / 'gt.fras')
        write_meta(
            out / 'gt.fras',
            resolution_um_per_px=raster.resolution_um_per_px, scale=scale,
        )
        record = {
            'slide_id': spec.slide_id,
            'width_px': spec.width,
            'height_px': spec.height,
            'resolution_um_per_px': raster.resolution_um_per_px,
            'seed': spec.seed,
            'annotations': len(annotations),
            'agreed_mitoses': len(agreed_mitoses(annotations)),
            'hard_negatives': len(hard_negative_candidates(annotations)),
            'scale': scale,
            'fp_rate': None,
            'blur': None,
        }
        if options['predicted']:
            tissue = spec.tissue_mask(scale)
            fp_rate = options['fp_rate']
            if fp_rate is None:
                fp_rate = matched_fp_rate(annotations, tissue)
            blur = options['blur']
            if blur is None:
                blur = default_blur(scale)
            predicted = corrupt_map(
                gt, fp_rate, options['fn_rate'], blur, spec.seed,
                circle=circle, tissue=tissue,
            )
            write_fras(predicted, out / 'predicted.fras')
            write_meta(
                out / 'predicted.fras',
                resolution_um_per_px=raster.resolution_um_per_px,
                scale=scale,
            )
            record['fp_rate'] = fp_rate
            record['blur'] = blur
        write_json(record, out / 'synth.json')
        self.emit(record)
