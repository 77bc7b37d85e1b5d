"""
Portfolio backtest of the UP, CP and EWP allocation rules
"""
from portfolio.backtest import BacktestRow, backtest, backtest_grid

from ...reports import write_backtest_paths, write_backtest_summary, write_json
from ..base import RunCommand, comma_list


class Command(RunCommand):
    help = (
        'Backtest the allocation rules on one-step forecasts; writes returns.csv, '
        'weights_<strategy>.csv and backtest_summary.csv'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('data', help='CSV series of returns (or prices with data.transform)')
        parser.add_argument('--target', type=float, help='per-period target return m (default 0.001)')
        parser.add_argument('--strategies', type=comma_list(str), help='subset of up,cp,ewp')
        parser.add_argument('--compound', action='store_true', default=None, help='compound instead of summing returns')
        parser.add_argument('--grid', action='store_true', help='also run every (d, delta, beta) grid cell')

    def config_overrides(self, options):
        return {
            'portfolio': {
                'target': options.get('target'),
                'strategies': options.get('strategies'),
                'compound': options.get('compound'),
            },
        }

    def run(self, run_config, out, **options):
        frame = self.load_series(run_config, options['data'])
        plan = run_config.portfolio
        strategies = plan['strategies']
        config = run_config.model_config(frame.p)

        report = backtest(
            frame, config, run_config.make_prior(config),
            target=plan['target'], strategies=strategies, compound=plan['compound'],
        )
        write_backtest_paths(report, frame.labels, out)

        if options.get('grid'):
            grid = run_config.grid
            configs = [
                run_config.model_config(frame.p, d=d, delta=delta, beta=beta)
                for d in grid['d'] for delta in grid['delta'] for beta in grid['beta']
            ]
            rows = backtest_grid(
                frame, configs, target=plan['target'], strategies=strategies,
                priors=run_config.make_prior, compound=plan['compound'], jobs=run_config.run['jobs'],
            )
        else:
            rows = [BacktestRow(config=config, summary=report.summary, failed_steps=report.failed_steps)]
        failed = write_backtest_summary(rows, report.strategies, out / 'backtest_summary.csv')
        if failed:
            write_json(failed, out / 'failed_backtests.json')
        write_json({**report.metadata, 'target': report.target, 'summary': report.summary,
                    'failed_steps': report.failed_steps}, out / 'backtest_report.json')
        write_json(run_config.to_dict(), out / 'run_config.json')
        self.report(
            f'{report.label}: ' + ', '.join(f'{name.upper()} {value:.4f}%' for name, value in report.summary.items())
        )
