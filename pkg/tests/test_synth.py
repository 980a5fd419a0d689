import numpy as np
import pytest
from scipy import ndimage

from conftest import SMALL_RESOLUTION
from fixtures.slides import make_synth_spec
from slides.annotations import Label, agreed_mitoses
from slides.density import CircleSpec, render_gt_map
from slides.exceptions import DomainError, OracleScaleError
from slides.geometry import HpfSpec
from slides.maskgen import MaskParams
from slides.proposal import propose
from slides.raster import BinaryMask, DensityMap, SlideRaster
from slides.synth import (
    Ellipse,
    Hotspot,
    SynthSpec,
    corrupt_map,
    default_blur,
    generate,
    matched_fp_rate,
    oracle_propose,
)


def test_zero_rates_give_no_annotations():
    spec = make_synth_spec(1, hotspots=(), base_rate=0)
    raster, annotations = generate(spec)
    assert len(annotations) == 0
    assert (raster.width_px, raster.height_px) == (256, 192)
    assert raster.resolution_um_per_px == SMALL_RESOLUTION


def test_generation_is_deterministic(synth_spec):
    raster, annotations = generate(synth_spec)
    again_raster, again_annotations = generate(synth_spec)
    assert raster == again_raster
    assert annotations == again_annotations, (
        "Убедитесь, что препарат полностью определяется параметрами и seed."
    )
    _, other = generate(make_synth_spec(8))
    assert other != annotations


def test_annotations_lie_in_tissue():
    for seed in range(10):
        spec = make_synth_spec(seed)
        _, annotations = generate(spec)
        for item in annotations.items:
            assert spec.tissue_at(float(item.x_px), float(item.y_px)), (
                "Убедитесь, что митозы размещаются только в ткани."
            )


def test_expected_number_of_mitoses():
    spec = make_synth_spec(0)
    xs, ys = np.meshgrid(
        np.arange(spec.width, dtype=float),
        np.arange(spec.height, dtype=float),
    )
    expected = float(
        (spec.intensity_at(xs, ys) * spec.tissue_at(xs, ys)).sum()
    ) * 50
    total = sum(len(generate(make_synth_spec(seed))[1]) for seed in range(50))
    assert abs(total - expected) <= 3 * np.sqrt(expected), (
        "Убедитесь, что число митозов соответствует интегралу "
        "интенсивности по ткани."
    )


def test_hotspot_concentrates_mitoses():
    inside = outside = 0
    for seed in range(20):
        spec = make_synth_spec(seed)
        _, annotations = generate(spec)
        for x, y in (item.point for item in annotations.items):
            if (x - 100) ** 2 + (y - 90) ** 2 <= 24 ** 2:
                inside += 1
            else:
                outside += 1
    spec = make_synth_spec(0)
    xs, ys = np.meshgrid(np.arange(256.0), np.arange(192.0))
    tissue = spec.tissue_at(xs, ys)
    near = (xs - 100) ** 2 + (ys - 90) ** 2 <= 24 ** 2
    inside_density = inside / np.count_nonzero(tissue & near)
    outside_density = outside / np.count_nonzero(tissue & ~near)
    assert inside_density > 4 * outside_density, (
        "Убедитесь, что плотность митозов в очаге заметно выше фона."
    )


def test_label_fractions():
    labels = []
    for seed in range(5):
        _, annotations = generate(make_synth_spec(seed, base_rate=20000))
        labels.extend(
            (item.label_obs1, item.label_obs2) for item in annotations.items
        )
    total = len(labels)
    disagreed = labels.count((Label.MITOSIS, Label.NON_MITOSIS)) / total
    unclassifiable = labels.count(
        (Label.UNCLASSIFIABLE, Label.UNCLASSIFIABLE)
    ) / total
    assert abs(disagreed - 0.15) <= 0.03, (
        "Убедитесь, что доля расхождений экспертов соответствует параметру."
    )
    assert abs(unclassifiable - 0.05) <= 0.02


def spread_points(count, spacing=20):
    side = int(np.ceil(np.sqrt(count)))
    return [
        (10 + spacing * (k % side), 10 + spacing * (k // side))
        for k in range(count)
    ]


def test_corrupt_map_identity():
    gt = render_gt_map(spread_points(25), 120, 120, CircleSpec(3))
    density = gt.to_density()
    assert corrupt_map(density, 0, 0, 0, seed=4) == density, (
        "Убедитесь, что без искажений карта не меняется."
    )


def test_corrupt_map_drops_circles():
    gt = render_gt_map(spread_points(100), 220, 220, CircleSpec(3))
    corrupted = corrupt_map(gt.to_density(), 0, 0.99, 0, seed=4)
    _, remaining = ndimage.label(corrupted.values > 0)
    assert remaining <= 10, (
        "Убедитесь, что fn_rate удаляет круги целиком."
    )
    assert corrupt_map(gt.to_density(), 0, 0.99, 0, seed=4) == corrupted


def test_corrupt_map_bounds_and_tissue():
    bits = np.zeros((40, 40), dtype=np.uint8)
    bits[:, :20] = 1
    empty = DensityMap(np.zeros((40, 40)))
    corrupted = corrupt_map(
        empty, 50_000, 0, 0, seed=9, circle=CircleSpec(1),
        tissue=BinaryMask(bits),
    )
    assert corrupted.values.max() > 0
    assert not corrupted.values[:, 21:].any(), (
        "Убедитесь, что ложные круги ставятся только в ткань."
    )
    blurred = corrupt_map(
        DensityMap(bits.astype(np.float32)), 50_000, 0.5, 3, seed=9
    )
    assert 0 <= blurred.values.min() and blurred.values.max() <= 1


@pytest.mark.parametrize(
    "arguments",
    [(-1, 0, 0), (0, 1, 0), (0, -0.1, 0), (0, 0, -1)],
)
def test_corrupt_map_rejects_rates(arguments):
    with pytest.raises(DomainError):
        corrupt_map(DensityMap(np.zeros((2, 2))), *arguments, seed=0)


@pytest.mark.parametrize(
    ("scale", "expected"),
    [(1, 8), (2, 4), (4, 2), (8, 1), (32, 1)],
)
def test_default_blur_is_eight_full_resolution_pixels(scale, expected):
    assert default_blur(scale) == expected, (
        "Убедитесь, что размытие по умолчанию равно 8 px полного "
        "разрешения на сетке карты и не меньше 1."
    )


def test_default_blur_rejects_bad_scale():
    with pytest.raises(DomainError):
        default_blur(0)


def nearly_full_tissue():
    pixels = np.full((48, 64), 90, dtype=np.uint8)
    pixels[:4, :4] = 230
    return SlideRaster(pixels, SMALL_RESOLUTION)


def test_oracle_with_single_valid_origin(rng):
    raster = nearly_full_tissue()
    params = MaskParams(2, 0, 0.95)
    activity = DensityMap(rng.random((24, 32)), scale=2)
    oracle = oracle_propose(raster, activity, HpfSpec(), params)
    proposal = propose(raster, activity, HpfSpec(), params)
    assert oracle.origin == proposal.origin == (0, 0)
    assert oracle.activity_score == pytest.approx(proposal.activity_score)


def test_zero_activity_takes_first_valid_origin(synth_spec, small_params):
    raster, _ = generate(synth_spec)
    activity = DensityMap(np.zeros((24, 32)), scale=8)
    oracle = oracle_propose(raster, activity, HpfSpec(), small_params)
    proposal = propose(raster, activity, HpfSpec(), small_params)
    assert proposal.origin == oracle.origin, (
        "Убедитесь, что при нулевой активности выбирается первое "
        "допустимое окно в порядке строк."
    )
    assert proposal.activity_score == 0


def test_oracle_refuses_large_problems():
    pixels = np.full((256, 256), 90, dtype=np.uint8)
    pixels[:8, :8] = 230
    raster = SlideRaster(pixels, SMALL_RESOLUTION)
    with pytest.raises(OracleScaleError):
        oracle_propose(
            raster, DensityMap(np.zeros((256, 256))), HpfSpec(),
            MaskParams(1, 0, 0.95),
        )


def test_tissue_mask_samples_pixel_centres(synth_spec):
    mask = synth_spec.tissue_mask(scale=8)
    assert (mask.scale, mask.bits.shape) == (8, (24, 32))
    assert bool(mask.bits[12, 16]) == bool(synth_spec.tissue_at(132.0, 100.0))
    assert not mask.bits[0, 0]


def test_matched_fp_rate(mixed_annotations):
    tissue = BinaryMask(np.ones((10, 10)), scale=10)
    assert matched_fp_rate(mixed_annotations, tissue) == pytest.approx(200), (
        "Убедитесь, что плотность считается на мегапиксель ткани "
        "в полном разрешении."
    )
    empty = BinaryMask(np.zeros((10, 10)), scale=10)
    assert matched_fp_rate(mixed_annotations, empty) == 0.0


def test_mitoses_are_agreed_by_default():
    spec = SynthSpec(
        width=64, height=64, tissue=(Ellipse(32, 32, 30, 30),),
        hotspots=(Hotspot(32, 32, 8, 200_000),), seed=2,
    )
    _, annotations = generate(spec)
    assert len(annotations) > 0
    assert len(agreed_mitoses(annotations)) == len(annotations)


def test_spec_from_dict_and_validation():
    spec = SynthSpec.from_dict({
        "width": 10, "height": 10,
        "tissue": [{"center_x": 5, "center_y": 5, "semi_axis_x": 4,
                    "semi_axis_y": 4}],
    })
    assert spec.tissue == (Ellipse(5, 5, 4, 4),)
    with pytest.raises(DomainError):
        SynthSpec(width=10, height=10, tissue=())
    with pytest.raises(DomainError):
        SynthSpec(
            width=10, height=10, tissue=(Ellipse(5, 5, 4, 4),),
            disagreement_fraction=0.7, unclassifiable_fraction=0.5,
        )
