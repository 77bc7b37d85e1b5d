"""
Order and discount selection: likelihood grid plus sequential Bayes factors
"""
from dynamics.exceptions import ConfigurationError
from dynamics.selection import compare_against, grid_search

from ...reports import write_bayes_traces, write_json, write_selection_table
from ..base import RunCommand, comma_list


class Command(RunCommand):
    help = (
        'Rank (d, delta, beta) cells by log-likelihood (selection.csv, likelihood_report.json) and trace Bayes factors '
        'of the configured model against rival orders (bayes_factors.csv)'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('data', help='CSV series')
        parser.add_argument('--d-values', type=comma_list(int), help='orders, e.g. 1,2,3')
        parser.add_argument('--delta-values', type=comma_list(float), help='state discounts')
        parser.add_argument('--beta-values', type=comma_list(float), help='volatility discounts')
        parser.add_argument('--rivals', type=comma_list(int), help='orders compared by Bayes factors')
        parser.add_argument('--d', type=int, help='order of the reference model')

    def config_overrides(self, options):
        return {
            'model': {'d': options.get('d')},
            'grid': {
                'd': options.get('d_values'),
                'delta': options.get('delta_values'),
                'beta': options.get('beta_values'),
                'rivals': options.get('rivals'),
            },
        }

    def run(self, run_config, out, **options):
        frame = self.load_series(run_config, options['data'])
        grid = run_config.grid

        cells = grid_search(
            frame, grid['d'], grid['delta'], grid['beta'],
            priors=run_config.make_prior, jobs=run_config.run['jobs'],
        )
        failed = write_selection_table(cells, frame.labels, out / 'selection.csv')
        if failed:
            write_json(failed, out / 'failed_cells.json')
            self.stderr.write(f'{len(failed)} grid cell(s) failed; see failed_cells.json')
        write_json(
            [
                {'rank': cell.rank, 'd': cell.d, 'delta': cell.delta, 'beta': cell.beta, **cell.likelihood}
                for cell in cells if not cell.failed
            ],
            out / 'likelihood_report.json',
        )

        reference = run_config.model_config(frame.p)
        rivals = grid['rivals'] if grid['rivals'] is not None else [d for d in grid['d'] if d != reference.d]
        if rivals and len(set(reference.delta)) != 1:
            raise ConfigurationError('grid.rivals: Bayes-factor rivals need a scalar model.delta')
        rival_configs = [
            run_config.model_config(frame.p, d=order, delta=float(reference.delta[0])) for order in rivals
        ]
        traces = compare_against(frame, reference, rival_configs, priors=run_config.make_prior)
        write_bayes_traces(rivals, traces, out / 'bayes_factors.csv')
        write_json(run_config.to_dict(), out / 'run_config.json')

        best = next((cell for cell in cells if not cell.failed), None)
        if best is not None:
            self.report(f'best cell: d={best.d} delta={best.delta:g} beta={best.beta:g} loglik={best.loglik:.4f}')
