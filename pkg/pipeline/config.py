"""
RunConfig: the JSON run configuration shared by every management command.

Values are layered defaults <- JSON file <- command-line overrides and then
validated by RunConfigForm.  Validation errors name the dotted JSON path.
"""
import copy
import json
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from dynamics.exceptions import ConfigurationError
from dynamics.model_core import ModelConfig, default_prior

from .forms import RunConfigForm

logger = logging.getLogger(__name__)

DEFAULTS = {
    'model': {
        'p': None,
        'd': 2,
        'delta': 0.98,
        'beta': 0.9,
        'horizon_discount': 'recursive',
    },
    'prior': {
        'state_spread': 1000.0,
        'volatility_scale': 1.0,
        'initial_belief': None,
    },
    'data': {
        'transform': 'none',
        'time_column': '',
    },
    'forecast': {
        'horizons': [1, 2, 3, 4, 5],
        'credible_level': 0.9,
        'snapshot_every': 1,
    },
    'grid': {
        'd': [1, 2, 3],
        'delta': [0.8, 0.9, 0.95, 0.98, 1.0],
        'beta': [0.9, 0.95, 0.99],
        'rivals': None,
    },
    'portfolio': {
        'target': 0.001,
        'strategies': ['up', 'cp', 'ewp'],
        'compound': False,
    },
    'simulation': {
        'p': 2,
        'n_obs': 1000,
        'volatility_mode': 'beta',
        'sigma_scale': 1e-4,
        'state_spread': 1e-4,
        'ar_coefficient': 0.3,
        'explosion_guard': 1e6,
    },
    'run': {
        'output_dir': None,
        'seed': 0,
        'jobs': 1,
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; one dict per JSON section."""

    model: dict
    prior: dict
    data: dict
    forecast: dict
    grid: dict
    portfolio: dict
    simulation: dict
    run: dict

    def model_config(self, p, d=None, delta=None, beta=None):
        """ModelConfig for a p-dimensional series, optionally overriding d, delta, beta."""
        declared = self.model['p']
        if declared is not None and declared != p:
            raise ConfigurationError(f'model.p is {declared} but the series has {p} columns')
        return ModelConfig(
            p=p,
            d=self.model['d'] if d is None else d,
            delta=self.model['delta'] if delta is None else delta,
            beta=self.model['beta'] if beta is None else beta,
            horizon_discount=self.model['horizon_discount'],
        )

    def make_prior(self, config):
        """Prior for ``config`` from the prior section."""
        belief = self.prior['initial_belief']
        if belief is not None and np.shape(belief) != (config.dim, config.p):
            # an initial belief only fits one (d, p); other grid cells get zeros
            belief = None
        return default_prior(
            config,
            initial_belief=belief,
            state_spread=self.prior['state_spread'],
            volatility_scale=self.prior['volatility_scale'],
        )

    @property
    def output_dir(self):
        return self.run['output_dir']

    def to_dict(self):
        data = {name: dict(getattr(self, name)) for name in DEFAULTS}
        data['run']['output_dir'] = str(data['run']['output_dir'])
        return data


def _merge(base, layer, origin):
    errors = []
    for section, values in layer.items():
        if section not in base:
            errors.append(f'{section}: unknown section ({origin})')
            continue
        if not isinstance(values, dict):
            errors.append(f'{section}: must be an object ({origin})')
            continue
        for key, value in values.items():
            if key not in base[section]:
                errors.append(f'{section}.{key}: unknown key ({origin})')
                continue
            base[section][key] = value
    return errors


def read_config_file(path):
    """Parsed JSON object from ``path``."""
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigurationError(f'config file not found: {path}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'{path}: invalid JSON ({exc})') from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f'{path}: the top level must be a JSON object')
    return data


def load_run_config(path=None, overrides=None):
    """
    Build and validate a RunConfig.

    Args:
        path: optional JSON file with any subset of the sections in DEFAULTS
        overrides (dict): {section: {key: value}} applied last (None values skipped)

    Raises:
        ConfigurationError: one line per invalid field, as ``section.key: message``
    """
    merged = copy.deepcopy(DEFAULTS)
    errors = []
    if path:
        errors += _merge(merged, read_config_file(path), path)
    if overrides:
        cleaned = {
            section: {key: value for key, value in values.items() if value is not None}
            for section, values in overrides.items()
        }
        errors += _merge(merged, cleaned, 'command line')
    if merged['run']['output_dir'] is None:
        merged['run']['output_dir'] = str(settings.TVVAR_OUTPUT_DIR)

    flat = {
        f'{section}__{key}': value
        for section, values in merged.items()
        for key, value in values.items()
        if value is not None
    }
    form = RunConfigForm(data=flat)
    if not form.is_valid():
        for name, messages in form.errors.items():
            path_name = name.replace('__', '.') if name != '__all__' else 'config'
            errors += [f'{path_name}: {message}' for message in messages]
    if errors:
        raise ConfigurationError('invalid run configuration:\n  ' + '\n  '.join(errors))

    sections = {section: {} for section in DEFAULTS}
    for name, value in form.cleaned_data.items():
        section, key = name.split('__', 1)
        sections[section][key] = value
    sections['data']['time_column'] = sections['data']['time_column'] or None
    logger.debug('run configuration: %s', sections)
    return RunConfig(**sections)
