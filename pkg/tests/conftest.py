import json
from io import StringIO
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np
import pytest
from django.apps import apps
from django.core.management import call_command

N_RANDOM_INSTANCES = 200
N_ROUND_TRIPS = 1000
SMALL_RESOLUTION = 27.775
MEDIUM_RESOLUTION = 13.8875


class SafeImportFromContextManager:
    def __init__(
            self,
            import_path: str,
            import_names: Iterable[str],
            import_of: str = "",
    ):
        self._import_path: str = import_path
        self._import_names: Iterable[str] = import_names
        self._import_of = f"{import_of} " if import_of else ""

    def __enter__(self):
        pass

    def __exit__(self, exc_type, exc_value, traceback):
        if exc_type is ImportError:
            disp_imp_names = "`, ".join(self._import_names)
            raise AssertionError(
                f"Убедитесь, что в файле `{self._import_path}` нет ошибок. "
                f"При импорте из него {self._import_of}"
                f"`{disp_imp_names}` возникла ошибка:\n"
                f"{exc_type.__name__}: {exc_value}"
            )


registered_apps = set(app.name for app in apps.get_app_configs())
for need_app_name in ("slides", "evaluation"):
    if need_app_name not in registered_apps:
        raise AssertionError(
            "Убедитесь, что зарегистрировано приложение "
            f"{need_app_name}"
        )

with SafeImportFromContextManager(
        "slides/synth.py", ["SynthSpec", "generate"], import_of="генератора"
):
    from slides.synth import SynthSpec, generate  # noqa:F401

pytest_plugins = [
    "fixtures.slides",
    "fixtures.annotations",
]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def run_command(name: str, *args, **kwargs) -> dict:
    """Выполнить подкоманду и вернуть JSON, напечатанный в stdout."""
    out = StringIO()
    call_command(name, *args, stdout=out, **kwargs)
    return json.loads(out.getvalue())


def brute_window_sum(values: np.ndarray, x: int, y: int, w: int, h: int):
    return values[y:y + h, x:x + w].sum()


def brute_argmax(
        values: np.ndarray, allowed: np.ndarray, w: int, h: int
) -> Tuple[Tuple[int, int], float]:
    """Полный перебор начал окна в порядке строк; первое максимальное."""
    best = None
    rows = values.shape[0] - h + 1
    cols = values.shape[1] - w + 1
    for y in range(rows):
        for x in range(cols):
            if not allowed[y, x]:
                continue
            total = float(brute_window_sum(values, x, y, w, h))
            if best is None or total > best[1]:
                best = ((x, y), total)
    return best


def points_inside(
        points: Iterable[Tuple[int, int]], x: int, y: int, w: int, h: int
) -> List[Tuple[int, int]]:
    return [
        (px, py) for px, py in points
        if x <= px < x + w and y <= py < y + h
    ]


def file_bytes(folder: Path) -> dict:
    return {
        path.name: path.read_bytes()
        for path in sorted(Path(folder).iterdir())
        if path.is_file()
    }
