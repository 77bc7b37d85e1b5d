"""
Run Configuration Form
"""
from django import forms

from dynamics.model_core import BETA_LOWER, HORIZON_DISCOUNTS
from dynamics.simulate import VOLATILITY_MODES
from portfolio.allocation import STRATEGIES

# 'path' is only reachable through simulate --spec
SIMULATION_MODES = [(name, name) for name in VOLATILITY_MODES if name != 'path']

TRANSFORM_CHOICES = [('none', 'none'), ('geometric', 'geometric'), ('log', 'log')]


def _number_list(value, name, integer=False):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise forms.ValidationError(f'{name} must be a number or a non-empty list of numbers')
    cast = int if integer else float
    numbers = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise forms.ValidationError(f'{name} entries must be numbers, got {item!r}')
        if integer and int(item) != item:
            raise forms.ValidationError(f'{name} entries must be integers, got {item!r}')
        numbers.append(cast(item))
    return numbers


def _check_discounts(values, name):
    for value in values:
        if not 0.0 < value <= 1.0:
            raise forms.ValidationError(f'{name} entries must lie in (0, 1], got {value!r}')
    return values


def _check_betas(values, name):
    for value in values:
        if not BETA_LOWER < value < 1.0:
            raise forms.ValidationError(f'{name} entries must lie in (2/3, 1), got {value!r}')
    return values


class RunConfigForm(forms.Form):
    """
    Flattened run configuration.

    Field ``section__key`` holds JSON key ``key`` of section ``section``;
    pipeline.config reports errors under the dotted path ``section.key``.
    """

    # model
    model__p = forms.IntegerField(required=False, min_value=1)
    model__d = forms.IntegerField(min_value=1)
    model__delta = forms.JSONField(help_text='scalar or d*p+1 discount factors')
    model__beta = forms.FloatField()
    model__horizon_discount = forms.ChoiceField(choices=[(name, name) for name in HORIZON_DISCOUNTS])

    # prior
    prior__state_spread = forms.FloatField(min_value=0.0)
    prior__volatility_scale = forms.FloatField(min_value=0.0)
    prior__initial_belief = forms.JSONField(required=False)

    # data
    data__transform = forms.ChoiceField(choices=TRANSFORM_CHOICES)
    data__time_column = forms.CharField(required=False)

    # forecast
    forecast__horizons = forms.JSONField()
    forecast__credible_level = forms.FloatField()
    forecast__snapshot_every = forms.IntegerField(min_value=0)

    # grid
    grid__d = forms.JSONField()
    grid__delta = forms.JSONField()
    grid__beta = forms.JSONField()
    grid__rivals = forms.JSONField(required=False, help_text='orders compared by Bayes factors')

    # portfolio
    portfolio__target = forms.FloatField()
    portfolio__strategies = forms.JSONField()
    portfolio__compound = forms.BooleanField(required=False)

    # simulation
    simulation__p = forms.IntegerField(min_value=1)
    simulation__n_obs = forms.IntegerField(min_value=2)
    simulation__volatility_mode = forms.ChoiceField(choices=SIMULATION_MODES)
    simulation__sigma_scale = forms.FloatField()
    simulation__state_spread = forms.FloatField(min_value=0.0)
    simulation__ar_coefficient = forms.FloatField()
    simulation__explosion_guard = forms.FloatField()

    # run
    run__output_dir = forms.CharField()
    run__seed = forms.IntegerField(min_value=0, max_value=2 ** 64 - 1)
    run__jobs = forms.IntegerField(min_value=1)

    def clean_model__delta(self):
        """Scalar or list of discount factors in (0, 1]"""
        value = self.cleaned_data.get('model__delta')
        values = _check_discounts(_number_list(value, 'delta'), 'delta')
        return values[0] if isinstance(value, (int, float)) else values

    def clean_model__beta(self):
        """Volatility discount in (2/3, 1)"""
        beta = self.cleaned_data.get('model__beta')
        _check_betas([beta], 'beta')
        return beta

    def clean_prior__initial_belief(self):
        value = self.cleaned_data.get('prior__initial_belief')
        if value in (None, ''):
            return None
        if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
            raise forms.ValidationError('initial_belief must be a list of rows')
        return value

    def clean_forecast__horizons(self):
        horizons = _number_list(self.cleaned_data.get('forecast__horizons'), 'horizons', integer=True)
        if min(horizons) < 1:
            raise forms.ValidationError('horizons must be positive')
        return sorted(set(horizons))

    def clean_forecast__credible_level(self):
        level = self.cleaned_data.get('forecast__credible_level')
        if not 0.0 < level < 1.0:
            raise forms.ValidationError(f'credible_level must lie in (0, 1), got {level!r}')
        return level

    def clean_grid__d(self):
        orders = _number_list(self.cleaned_data.get('grid__d'), 'grid d', integer=True)
        if min(orders) < 1:
            raise forms.ValidationError('grid orders must be at least 1')
        return orders

    def clean_grid__delta(self):
        return _check_discounts(_number_list(self.cleaned_data.get('grid__delta'), 'grid delta'), 'grid delta')

    def clean_grid__beta(self):
        return _check_betas(_number_list(self.cleaned_data.get('grid__beta'), 'grid beta'), 'grid beta')

    def clean_grid__rivals(self):
        value = self.cleaned_data.get('grid__rivals')
        if value in (None, ''):
            return None
        orders = _number_list(value, 'rivals', integer=True)
        if min(orders) < 1:
            raise forms.ValidationError('rival orders must be at least 1')
        return orders

    def clean_portfolio__strategies(self):
        value = self.cleaned_data.get('portfolio__strategies')
        if isinstance(value, str):
            value = value.split(',')
        if not isinstance(value, list) or not value:
            raise forms.ValidationError('strategies must be a non-empty list')
        names = [str(name).strip().lower() for name in value]
        unknown = sorted(set(names) - set(STRATEGIES))
        if unknown:
            raise forms.ValidationError(f'unknown strategies {unknown}; choose from {list(STRATEGIES)}')
        return [name for name in STRATEGIES if name in names]

    def clean_simulation__explosion_guard(self):
        guard = self.cleaned_data.get('simulation__explosion_guard')
        if not guard > 0.0:
            raise forms.ValidationError('explosion_guard must be positive')
        return guard

    def clean_simulation__sigma_scale(self):
        scale = self.cleaned_data.get('simulation__sigma_scale')
        if not scale > 0.0:
            raise forms.ValidationError('sigma_scale must be positive')
        return scale

    def clean(self):
        """Cross-field checks on the model section"""
        cleaned_data = super().clean()
        d, delta, p = (cleaned_data.get(name) for name in ('model__d', 'model__delta', 'model__p'))
        if isinstance(delta, list) and d and p and len(delta) not in (1, d * p + 1):
            self.add_error('model__delta', f'delta needs 1 or d*p+1 = {d * p + 1} entries, got {len(delta)}')
        return cleaned_data
