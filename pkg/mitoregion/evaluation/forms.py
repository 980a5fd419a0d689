from django import forms

from slides.forms import MaskParamsForm, validate_positive


class EvaluateForm(MaskParamsForm):
    radius = forms.FloatField(validators=[validate_positive])
    circle_radius = forms.IntegerField(min_value=1)
    map_threshold = forms.FloatField(
        max_value=1, validators=[validate_positive]
    )
