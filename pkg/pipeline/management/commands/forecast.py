"""
h-step forecasts with credible bounds from a fitted posterior
"""
from dynamics.exceptions import ConfigurationError
from dynamics.filtering import FilterOptions, run_filter
from dynamics.forecast import forecast_path

from ...reports import load_state, write_forecast_table
from ..base import RunCommand


class Command(RunCommand):
    help = (
        'Forecast h = 1..H steps ahead from state.json written by fit, or from a CSV series '
        '(filtered first); writes forecast.csv'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('source', help='state.json from fit, or a CSV series')
        parser.add_argument('--horizon', type=int, help='largest horizon H (default: max of forecast.horizons)')
        parser.add_argument('--level', type=float, help='credible level, e.g. 0.9')
        parser.add_argument('--labels', help='comma-separated component names for state.json input')

    def config_overrides(self, options):
        horizon = options.get('horizon')
        return {
            'forecast': {
                'horizons': list(range(1, horizon + 1)) if horizon else None,
                'credible_level': options.get('level'),
            },
        }

    def run(self, run_config, out, **options):
        source = options['source']
        if source.endswith('.json'):
            state, config = load_state(source)
            labels = options['labels'].split(',') if options.get('labels') else [f'y{i + 1}' for i in range(config.p)]
            if len(labels) != config.p:
                raise ConfigurationError(f'--labels names {len(labels)} components but the state has p={config.p}')
        else:
            frame = self.load_series(run_config, source)
            config = run_config.model_config(frame.p)
            result = run_filter(frame, config, run_config.make_prior(config), FilterOptions(snapshot_every=0))
            state, labels = result.final, frame.labels

        horizon = max(run_config.forecast['horizons'])
        results = forecast_path(state, config, horizon)
        write_forecast_table(results, labels, run_config.forecast['credible_level'], out / 'forecast.csv')
        self.report(f'{config.label()}: forecast h=1..{horizon} from t={state.t}')
