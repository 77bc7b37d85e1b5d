"""
Simulate a synthetic TV-VAR series with its ground truth
"""
import numpy as np

from dynamics.exceptions import ConfigurationError
from dynamics.model_core import ModelConfig
from dynamics.simulate import SimSpec, generate

from ...config import read_config_file
from ...frames import write_csv
from ...reports import write_json, write_truth
from ..base import RunCommand

SHAPE_FLAGS = ('p', 'd', 'n_obs', 'volatility_mode')


def build_sim_spec(run_config):
    """
    SimSpec from the model and simulation sections.

    Phi_d has a zero intercept and ar_coefficient * I on the first lag;
    Sigma_d = sigma_scale * I and P* = state_spread * I.
    """
    simulation = run_config.simulation
    p = simulation['p']
    config = ModelConfig(
        p=p,
        d=run_config.model['d'],
        delta=run_config.model['delta'],
        beta=run_config.model['beta'],
        horizon_discount=run_config.model['horizon_discount'],
    )
    phi0 = np.zeros((config.dim, p))
    phi0[1:p + 1] = simulation['ar_coefficient'] * np.eye(p)
    return SimSpec(
        config=config,
        phi0=phi0,
        sigma0=simulation['sigma_scale'] * np.eye(p),
        n_obs=simulation['n_obs'],
        seed=run_config.run['seed'],
        volatility_mode=simulation['volatility_mode'],
        state_spread=simulation['state_spread'] * np.eye(config.dim),
        explosion_guard=simulation['explosion_guard'],
    )


def load_sim_spec(path, seed=None):
    """
    SimSpec from a simspec.json file; ``seed`` replaces the stored seed when given.

    The file carries Phi_d, Sigma_d and, for volatility_mode 'path', the full
    Sigma_t path, so any truth a previous run wrote can be replayed.
    """
    data = read_config_file(path)
    if seed is not None:
        data['seed'] = seed
    return SimSpec.from_dict(data)


class Command(RunCommand):
    help = 'Simulate data from the TV-VAR model; writes data.csv, truth_phi.csv, truth_sigma.csv and simspec.json'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--spec', help='simspec.json to simulate from (Phi_d, Sigma_d, optional Sigma path)')
        parser.add_argument('--p', type=int, help='series dimension')
        parser.add_argument('--d', type=int, help='autoregressive order')
        parser.add_argument('--n-obs', type=int, help='series length N')
        parser.add_argument('--volatility-mode', choices=['fixed', 'beta'], help='volatility evolution')

    def config_overrides(self, options):
        return {
            'model': {'d': options.get('d')},
            'simulation': {
                'p': options.get('p'),
                'n_obs': options.get('n_obs'),
                'volatility_mode': options.get('volatility_mode'),
            },
        }

    def run(self, run_config, out, **options):
        if options.get('spec'):
            given = [f'--{name.replace("_", "-")}' for name in SHAPE_FLAGS if options.get(name) is not None]
            if given:
                raise ConfigurationError(f'{", ".join(given)} cannot be combined with --spec')
            spec = load_sim_spec(options['spec'], seed=options.get('seed'))
        else:
            spec = build_sim_spec(run_config)

        frame, truth = generate(spec)
        write_csv(frame, out / 'data.csv')
        write_truth(truth, frame.labels, out)
        write_json(spec.to_dict(), out / 'simspec.json')
        write_json(run_config.to_dict(), out / 'run_config.json')
        self.report(f'simulated N={frame.n_obs}, p={frame.p} ({spec.volatility_mode}) into {out}')
