HPF_AREA_MM2 = 0.237
HPF_FIELDS = 10
HPF_ASPECT = 4 / 3

PATCH_SIZE_PX = 512
PATCH_MARGIN_PX = 64
OVERLAP_PER_SIDE = 'per-side'
OVERLAP_TOTAL = 'total'
OVERLAP_MODES = (OVERLAP_PER_SIDE, OVERLAP_TOTAL)

CIRCLE_RADIUS_PX = 25

MASK_DOWNSAMPLE = 32
CLOSING_RADIUS_PX = 2
COVERAGE_THRESHOLD = 0.95

VALIDATION_FRACTION = 0.2
VAL_SIDE_BOTTOM = 'bottom'
VAL_SIDE_TOP = 'top'
VAL_SIDES = (VAL_SIDE_BOTTOM, VAL_SIDE_TOP)

HIGH_GRADE_MC = 7

SAMPLER_ANCHOR = 'anchor'
SAMPLER_REJECTION = 'rejection'
SAMPLER_STRATEGIES = (SAMPLER_ANCHOR, SAMPLER_REJECTION)
REJECTION_ATTEMPTS = 10_000

ORACLE_MAX_WORK = 2 ** 26

LUMA_WEIGHTS = (299, 587, 114)

SYNTH_BACKGROUND_GRAY = 240
SYNTH_TISSUE_GRAY = 120
MEGAPIXEL = 1_000_000

SYNTH_FN_RATE = 0.3
SYNTH_BLUR_PX = 8

MAP_THRESHOLD = 0.5

PATCH_FILE_TEMPLATE = 'patch_{x}_{y}.fras'
