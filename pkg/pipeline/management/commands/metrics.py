"""
MSSE(h), MAE(h) and ME(h) for the configured model
"""
from dynamics.forecast import metrics_table

from ...reports import write_json, write_metrics_table
from ..base import RunCommand, comma_list


class Command(RunCommand):
    help = 'Compute MSSE/MAE/ME for several forecast horizons; writes metrics.csv'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('data', help='CSV series')
        parser.add_argument('--horizons', type=comma_list(int), help='e.g. 1,2,3,4,5')
        parser.add_argument('--d', type=int, help='autoregressive order')
        parser.add_argument('--delta', type=float, help='discount factor')
        parser.add_argument('--beta', type=float, help='volatility discount')

    def config_overrides(self, options):
        return {
            'model': {'d': options.get('d'), 'delta': options.get('delta'), 'beta': options.get('beta')},
            'forecast': {'horizons': options.get('horizons')},
        }

    def run(self, run_config, out, **options):
        frame = self.load_series(run_config, options['data'])
        config = run_config.model_config(frame.p)
        metrics = metrics_table(frame, config, run_config.make_prior(config), run_config.forecast['horizons'])
        write_metrics_table(metrics, frame.labels, out / 'metrics.csv')
        write_json(run_config.to_dict(), out / 'run_config.json')
        one_step = metrics[0]
        self.report(f'{config.label()}: MSSE({one_step.h}) = ' + ', '.join(f'{v:.4f}' for v in one_step.msse))
