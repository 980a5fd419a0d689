from django import forms
from django.core.exceptions import ValidationError

from slides.constants import (
    OVERLAP_MODES,
    SAMPLER_STRATEGIES,
    VAL_SIDES,
)

SUBSETS = ('all', 'train', 'val')


def validate_positive(value):
    if value is not None and not value > 0:
        raise ValidationError(
            'Значение должно быть положительным, получено %(value)s.',
            params={'value': value},
        )


def validate_open_unit(value):
    if value is not None and not 0 < value < 1:
        raise ValidationError(
            'Значение должно лежать в (0, 1), получено %(value)s.',
            params={'value': value},
        )


def validate_rate(value):
    if value is not None and not 0 <= value < 1:
        raise ValidationError(
            'Значение должно лежать в [0, 1), получено %(value)s.',
            params={'value': value},
        )


def _choices(values):
    return [(value, value) for value in values]


class ThreadsForm(forms.Form):
    threads = forms.IntegerField(min_value=1)


class HpfForm(ThreadsForm):
    resolution = forms.FloatField(
        required=False, validators=[validate_positive]
    )
    hpf_area = forms.FloatField(validators=[validate_positive])
    n_fields = forms.IntegerField(min_value=1)
    aspect = forms.FloatField(validators=[validate_positive])


class MaskParamsForm(HpfForm):
    downsample = forms.IntegerField(min_value=1)
    closing_radius = forms.IntegerField(min_value=0)
    coverage = forms.FloatField(
        max_value=1, validators=[validate_positive]
    )


class GtMapForm(ThreadsForm):
    radius = forms.IntegerField(min_value=1)
    scale = forms.IntegerField(min_value=1)


class StitchForm(ThreadsForm):
    width = forms.IntegerField(min_value=1)
    height = forms.IntegerField(min_value=1)
    patch_size = forms.IntegerField(min_value=1)
    margin = forms.IntegerField(min_value=0)
    overlap_mode = forms.ChoiceField(choices=_choices(OVERLAP_MODES))


class SamplePatchesForm(ThreadsForm):
    patch_size = forms.IntegerField(min_value=1)
    count = forms.IntegerField(min_value=0)
    seed = forms.IntegerField()
    strategy = forms.ChoiceField(choices=_choices(SAMPLER_STRATEGIES))
    subset = forms.ChoiceField(choices=_choices(SUBSETS))
    validation_fraction = forms.FloatField(validators=[validate_open_unit])
    val_side = forms.ChoiceField(choices=_choices(VAL_SIDES))


class SynthForm(ThreadsForm):
    radius = forms.IntegerField(min_value=1)
    scale = forms.IntegerField(min_value=1)
    fn_rate = forms.FloatField(validators=[validate_rate])
    fp_rate = forms.FloatField(required=False, min_value=0)
    blur = forms.IntegerField(required=False, min_value=0)
