import numpy as np
import pytest

from conftest import (
    N_RANDOM_INSTANCES,
    brute_argmax,
    brute_window_sum,
    points_inside,
)
from evaluation.metrics import pearson_r
from fixtures.slides import make_hotspot_spec, make_synth_spec
from slides.annotations import agreed_mitoses
from slides.density import CircleSpec, render_gt_map
from slides.exceptions import DomainError, EmptyMaskError
from slides.geometry import HpfSpec, WindowSize, hpf_window_pixels
from slides.integral import integral, row_bands, window_sum
from slides.maskgen import MaskParams, valid_mask
from slides.proposal import (
    McDistribution,
    Quartile,
    RegionProposal,
    estimated_count,
    full_resolution_origin,
    is_high_grade,
    masked_argmax,
    mc_distribution,
    propose,
    quartile_placement,
    render_overlay,
    stride_origins,
    window_counts,
)
from slides.raster import BinaryMask, DensityMap, SlideRaster
from slides.synth import (
    corrupt_map,
    generate,
    matched_fp_rate,
    oracle_propose,
)


def random_instance(rng):
    height, width = (int(v) for v in rng.integers(1, 41, size=2))
    window = WindowSize(
        int(rng.integers(1, width + 1)), int(rng.integers(1, height + 1))
    )
    values = rng.integers(0, 4, size=(height, width)).astype(np.float32)
    allowed = rng.random((height, width)) < rng.uniform(0.05, 1)
    return values, allowed, window


def test_integral_window_sum(rng):
    values = rng.integers(0, 100, size=(13, 17))
    table = integral(values)
    assert table.is_exact
    for _ in range(50):
        w, h = int(rng.integers(1, 18)), int(rng.integers(1, 14))
        x, y = int(rng.integers(0, 18 - w)), int(rng.integers(0, 14 - h))
        assert window_sum(table, (x, y), WindowSize(w, h)) == (
            brute_window_sum(values, x, y, w, h)
        )
    with pytest.raises(DomainError):
        window_sum(table, (10, 0), WindowSize(8, 1))


@pytest.mark.parametrize(
    ("length", "parts", "expected"),
    [(10, 3, [(0, 3), (3, 6), (6, 10)]), (2, 8, [(0, 1), (1, 2)]),
     (5, 1, [(0, 5)])],
)
def test_row_bands(length, parts, expected):
    assert row_bands(length, parts) == expected


def test_masked_argmax_matches_brute_force(rng):
    for _ in range(N_RANDOM_INSTANCES):
        values, allowed, window = random_instance(rng)
        activity = DensityMap(values)
        valid = BinaryMask(allowed)
        expected = brute_argmax(
            values, allowed, window.width_px, window.height_px
        )
        for threads in (1, 3, 8):
            if expected is None:
                with pytest.raises(EmptyMaskError):
                    masked_argmax(activity, valid, window, threads)
                continue
            peak = masked_argmax(activity, valid, window, threads)
            assert (peak.origin, peak.window_sum) == expected, (
                "Убедитесь, что masked_argmax совпадает с полным перебором, "
                "равные суммы решаются в пользу первого окна в порядке "
                "строк, а число потоков не влияет на результат."
            )
            assert peak.score == pytest.approx(
                expected[1] / window.area_px
            )


def test_masked_argmax_is_scale_invariant(rng):
    for _ in range(50):
        values, allowed, window = random_instance(rng)
        if brute_argmax(
            values, allowed, window.width_px, window.height_px
        ) is None:
            continue
        peak = masked_argmax(DensityMap(values), BinaryMask(allowed), window)
        scaled = masked_argmax(
            DensityMap(values * 2.5), BinaryMask(allowed), window
        )
        assert scaled.origin == peak.origin, (
            "Убедитесь, что умножение карты на положительное число "
            "не меняет выбранное окно."
        )


def test_masked_argmax_is_translation_equivariant(rng):
    for _ in range(50):
        values, allowed, window = random_instance(rng)
        if brute_argmax(
            values, allowed, window.width_px, window.height_px
        ) is None:
            continue
        dx, dy = (int(v) for v in rng.integers(0, 6, size=2))
        shifted_values = np.pad(values, ((dy, 0), (dx, 0)))
        shifted_allowed = np.pad(allowed, ((dy, 0), (dx, 0)))
        peak = masked_argmax(DensityMap(values), BinaryMask(allowed), window)
        shifted = masked_argmax(
            DensityMap(shifted_values), BinaryMask(shifted_allowed), window
        )
        assert shifted.origin == (peak.origin[0] + dx, peak.origin[1] + dy)


def test_single_valid_origin_wins():
    values = np.zeros((10, 12), dtype=np.float32)
    values[0:3, 0:3] = 1
    allowed = np.zeros((10, 12), dtype=bool)
    allowed[5, 7] = True
    peak = masked_argmax(
        DensityMap(values), BinaryMask(allowed), WindowSize(3, 3)
    )
    assert peak.origin == (7, 5), (
        "Убедитесь, что при единственном допустимом начале выбирается "
        "именно оно, даже если активность в нём нулевая."
    )
    assert peak.score == 0


def test_masked_argmax_errors():
    activity = DensityMap(np.ones((4, 4)))
    with pytest.raises(EmptyMaskError):
        masked_argmax(activity, BinaryMask(np.zeros((4, 4))),
                      WindowSize(2, 2))
    with pytest.raises(EmptyMaskError):
        masked_argmax(activity, BinaryMask(np.ones((4, 4))),
                      WindowSize(5, 2))
    with pytest.raises(DomainError):
        masked_argmax(activity, BinaryMask(np.ones((4, 5))),
                      WindowSize(2, 2))
    with pytest.raises(DomainError):
        masked_argmax(activity, BinaryMask(np.ones((4, 4)), scale=2),
                      WindowSize(2, 2))


def test_full_resolution_origin_is_clamped():
    window = WindowSize(64, 48)
    assert full_resolution_origin((2, 1), 8, window, 100, 80) == (16, 8)
    assert full_resolution_origin((10, 5), 8, window, 100, 80) == (36, 32), (
        "Убедитесь, что окно в полном разрешении не выходит за препарат."
    )
    with pytest.raises(DomainError):
        full_resolution_origin((0, 0), 8, window, 60, 80)


def test_window_counts_match_brute_force(rng):
    for _ in range(30):
        points = [
            (int(x), int(y)) for x, y in rng.integers(0, 200, size=(40, 2))
        ]
        window = WindowSize(*(int(v) for v in rng.integers(1, 80, size=2)))
        origins = [
            (int(x), int(y)) for x, y in rng.integers(0, 150, size=(25, 2))
        ]
        counts = window_counts(points, origins, window)
        assert counts.tolist() == [
            len(points_inside(
                points, x, y, window.width_px, window.height_px
            ))
            for x, y in origins
        ]
    assert window_counts([], [(0, 0)], WindowSize(1, 1)).tolist() == [0]


def test_stride_must_be_multiple_of_mask_scale():
    valid = BinaryMask(np.ones((10, 10)), scale=4)
    with pytest.raises(DomainError):
        stride_origins(valid, WindowSize(8, 8), 6)
    origins = stride_origins(valid, WindowSize(8, 8), 8)
    assert origins[:3] == [(0, 0), (8, 0), (16, 0)]
    assert len(origins) == 25


def test_mc_distribution_quartiles(rng):
    valid = BinaryMask(np.ones((10, 10)), scale=4)
    window = WindowSize(8, 8)
    points = [(int(x), int(y)) for x, y in rng.integers(0, 40, (60, 2))]
    distribution = mc_distribution(points, valid, window, 8)
    expected = [
        len(points_inside(points, x, y, 8, 8))
        for y in range(0, 40, 8) for x in range(0, 40, 8)
    ]
    assert list(distribution.counts) == expected
    assert [distribution.q1, distribution.q2, distribution.q3] == (
        pytest.approx(list(np.percentile(expected, (25, 50, 75))))
    ), "Убедитесь, что квартили интерполируются линейно."
    with pytest.raises(EmptyMaskError):
        mc_distribution(points, BinaryMask(np.zeros((10, 10)), scale=4),
                        window, 8)


@pytest.mark.parametrize(
    ("mc", "expected"),
    [(4, Quartile.Q4), (3, Quartile.Q4), (2, Quartile.Q3),
     (1, Quartile.Q2), (0, Quartile.Q1)],
)
def test_quartile_placement_ties_go_up(mc, expected):
    distribution = McDistribution((0, 1, 2, 3, 4), 1.0, 2.0, 3.0)
    assert quartile_placement(mc, distribution) is expected


def test_quartile_placement_edge_cases():
    assert quartile_placement(
        10, McDistribution((2, 5, 8), 2.0, 5.0, 8.0)
    ) is Quartile.Q4
    assert quartile_placement(
        3, McDistribution((3, 3, 3), 3.0, 3.0, 3.0)
    ) is Quartile.Q4, (
        "Убедитесь, что при вырожденном распределении выбирается Q4."
    )
    with pytest.raises(EmptyMaskError):
        quartile_placement(1, McDistribution((), 0.0, 0.0, 0.0))


def test_estimated_count_and_grade():
    proposal = RegionProposal(
        0, 0, WindowSize(4, 4), 0.5, window_sum=10.0, scale=2
    )
    assert estimated_count(proposal, CircleSpec(1)) == pytest.approx(8.0)
    assert is_high_grade(7)
    assert not is_high_grade(6)


def test_render_overlay_draws_outline():
    raster = SlideRaster(np.full((48, 64), 100, dtype=np.uint8), 0.5)
    proposal = RegionProposal(16, 8, WindowSize(32, 24), 0.0)
    overlay = render_overlay(raster, proposal, 4)
    pixels = overlay.pixels
    assert pixels.shape == (12, 16)
    assert overlay.resolution_um_per_px == 2.0
    assert set(pixels[2, 4:12].tolist()) == {255}, (
        "Убедитесь, что рамка окна рисуется белым цветом."
    )
    assert set(pixels[2:8, 11].tolist()) == {255}
    assert pixels[4, 6] == 100
    assert pixels[0, 0] == 100


def test_propose_matches_oracle(small_params):
    for seed in range(50):
        spec = make_synth_spec(seed)
        raster, annotations = generate(spec)
        gt = render_gt_map(
            agreed_mitoses(annotations), spec.width, spec.height,
            CircleSpec(25), scale=8,
        )
        activity = corrupt_map(gt.to_density(), 0, 0.3, 0, seed)
        proposal = propose(
            raster, activity, HpfSpec(), small_params, annotations
        )
        oracle = oracle_propose(
            raster, activity, HpfSpec(), small_params, annotations
        )
        assert proposal.origin == oracle.origin, (
            "Убедитесь, что предложение совпадает с полным перебором "
            f"на синтетическом препарате seed={seed}."
        )
        assert proposal.activity_score == pytest.approx(
            oracle.activity_score
        )
        assert proposal.gt_mc == oracle.gt_mc


def test_propose_rejects_scale_mismatch(small_params, synth_spec):
    raster, _ = generate(synth_spec)
    activity = DensityMap(np.zeros((48, 64)), scale=4)
    with pytest.raises(DomainError):
        propose(raster, activity, HpfSpec(), small_params)


def test_hotspot_proposals_land_in_fourth_quartile():
    params = MaskParams(downsample=2, closing_radius_px=1,
                        coverage_threshold=0.95)
    circle = CircleSpec(4)
    placements, estimates, truths = [], [], []
    for seed, rate in enumerate(np.linspace(1500, 10000, 20)):
        spec = make_hotspot_spec(seed, float(rate))
        raster, annotations = generate(spec)
        mitoses = agreed_mitoses(annotations)
        tissue = spec.tissue_mask(scale=2)
        gt = render_gt_map(mitoses, spec.width, spec.height, circle, 2)
        activity = corrupt_map(
            gt.to_density(), matched_fp_rate(annotations, tissue), 0.3, 4,
            seed, circle=circle, tissue=tissue,
        )
        window = hpf_window_pixels(HpfSpec(), raster.resolution_um_per_px)
        valid = valid_mask(raster, window, params)
        proposal = propose(
            raster, activity, HpfSpec(), params, annotations, valid=valid
        )
        distribution = mc_distribution(
            mitoses, valid, window, 64, (spec.width, spec.height)
        )
        placements.append(quartile_placement(proposal.gt_mc, distribution))
        estimates.append(estimated_count(proposal, circle))
        truths.append(proposal.gt_mc)
    assert placements.count(Quartile.Q4) >= 18, (
        "Убедитесь, что предложенное окно попадает в четвёртый квартиль "
        "распределения MC хотя бы на 18 из 20 препаратов."
    )
    assert pearson_r(estimates, truths) >= 0.85, (
        "Убедитесь, что оценка MC по карте активности коррелирует "
        "с истинным MC предложенного окна."
    )
