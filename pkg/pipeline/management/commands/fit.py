"""
Filter a series and write the posterior trajectory and diagnostics
"""
import math

from dynamics.exceptions import ConfigurationError
from dynamics.filtering import FilterOptions, run_filter, spread_bound
from dynamics.selection import evaluate_log_likelihood

from ...reports import (
    write_diagnostics,
    write_json,
    write_posterior_means,
    write_state,
    write_state_spread,
    write_volatility,
)
from ..base import RunCommand, comma_list


class Command(RunCommand):
    help = (
        'Run the TV-VAR filter on a CSV series; writes posterior_means.csv, state_spread.csv, '
        'diagnostics.csv, volatility.csv, state.json and fit_summary.json'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('data', help='CSV series')
        parser.add_argument('--d', type=int, help='autoregressive order')
        parser.add_argument('--delta', type=comma_list(float), help='discount factor(s)')
        parser.add_argument('--beta', type=float, help='volatility discount')
        parser.add_argument('--snapshot-every', type=int, help='keep every k-th posterior (0 = none)')

    def config_overrides(self, options):
        delta = options.get('delta')
        return {
            'model': {
                'd': options.get('d'),
                'delta': delta[0] if delta and len(delta) == 1 else delta,
                'beta': options.get('beta'),
            },
            'forecast': {'snapshot_every': options.get('snapshot_every')},
        }

    def run(self, run_config, out, **options):
        frame = self.load_series(run_config, options['data'])
        config = run_config.model_config(frame.p)
        prior = run_config.make_prior(config)
        filter_options = FilterOptions(snapshot_every=run_config.forecast['snapshot_every'])

        result = run_filter(frame, config, prior, filter_options)
        write_diagnostics(result.diagnostics, frame.labels, out / 'diagnostics.csv')
        if result.snapshots:
            write_posterior_means(result.snapshots, frame.labels, out / 'posterior_means.csv')
            write_state_spread(result.snapshots, out / 'state_spread.csv')
        write_volatility(result.snapshots or [result.final], config, frame.labels, out / 'volatility.csv')
        write_state(result.final, config, out / 'state.json')

        bound = spread_bound(frame, config, prior)
        summary = {
            'config': config.to_dict(),
            'label': config.label(),
            'n_obs': frame.n_obs,
            'final_t': result.final.t,
            'spread_bound': bound if math.isfinite(bound) else None,
            'max_jitter': max((step.jitter for step in result.diagnostics), default=0.0),
        }
        try:
            likelihood = evaluate_log_likelihood(result.snapshots, frame, config)
        except ConfigurationError as exc:
            self.stderr.write(f'log-likelihood skipped: {exc}')
        else:
            summary['loglik'] = likelihood.total
            summary['likelihood'] = likelihood.summary()
        write_json(summary, out / 'fit_summary.json')
        write_json(run_config.to_dict(), out / 'run_config.json')
        self.report(f'{config.label()}: filtered t={config.d + 1}..{frame.n_obs}')
