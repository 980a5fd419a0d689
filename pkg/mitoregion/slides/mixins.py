from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from slides.constants import (
    CLOSING_RADIUS_PX,
    COVERAGE_THRESHOLD,
    HPF_AREA_MM2,
    HPF_ASPECT,
    HPF_FIELDS,
    MASK_DOWNSAMPLE,
)
from slides.exceptions import SlideError
from slides.geometry import HpfSpec
from slides.maskgen import MaskParams
from slides.reports import dumps

USAGE_ERROR = 2


class PipelineCommandMixin:
    """Общая часть подкоманд: потоки, проверка параметров, коды выхода."""

    form_class = None
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument(
            '--threads', type=int, default=settings.SLIDES_THREADS,
            help='Число потоков; результат от него не зависит '
                 '(по умолчанию: %(default)s).'
        )

    def clean_options(self, options):
        form = self.form_class(data=options)
        if not form.is_valid():
            problems = '; '.join(
                f'--{name.replace("_", "-")}: {" ".join(errors)}'
                for name, errors in form.errors.items()
            )
            raise CommandError(problems, returncode=USAGE_ERROR)
        return {**options, **form.cleaned_data}

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except SlideError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f'ошибка ввода-вывода: {exc}') from exc

    def output_dir(self, path):
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def emit(self, record):
        self.stdout.write(dumps(record), ending='')


class HpfArgumentsMixin:

    def add_hpf_arguments(self, parser):
        parser.add_argument(
            '--resolution', type=float, default=None,
            help='Разрешение сканера, мкм/px; иначе берётся из sidecar '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--hpf-area', type=float, default=HPF_AREA_MM2,
            help='Площадь одного поля зрения, мм² (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--n-fields', type=int, default=HPF_FIELDS,
            help='Число полей зрения в окне (по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--aspect', type=float, default=HPF_ASPECT,
            help='Соотношение сторон окна w/h (по умолчанию: %(default)s).'
        )

    def add_mask_arguments(self, parser):
        parser.add_argument(
            '--downsample', type=int, default=MASK_DOWNSAMPLE,
            help='Коэффициент уменьшения для маски '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--closing-radius', type=int, default=CLOSING_RADIUS_PX,
            help='Радиус закрытия на уменьшенной сетке '
                 '(по умолчанию: %(default)s).'
        )
        parser.add_argument(
            '--coverage', type=float, default=COVERAGE_THRESHOLD,
            help='Минимальная доля ткани в окне (по умолчанию: %(default)s).'
        )

    def hpf_spec(self, options):
        return HpfSpec(
            options['hpf_area'], options['n_fields'], options['aspect']
        )

    def mask_params(self, options):
        return MaskParams(
            options['downsample'], options['closing_radius'],
            options['coverage'],
        )
