"""
manage.py bench：运行一个缩放 / 精度实验并输出 CSV
"""

import io
import logging

from django.core.management.base import CommandError

from core.benchmarks import DEFAULT_MAX_N, EXPERIMENTS, run_experiment, write_csv
from core.management.base import EXIT_NUMERICAL, NufhtCommand

logger = logging.getLogger(__name__)


class Command(NufhtCommand):
    help = 'Run a timing or accuracy experiment and write CSV rows experiment,n,m,p,nu,eps,time_ms,rel_err'

    def add_arguments(self, parser):
        parser.add_argument('--experiment', required=True, help=f"one of: {', '.join(EXPERIMENTS)}")
        parser.add_argument('--out', default=None, help='CSV file; stdout when omitted')
        parser.add_argument('--seed', type=int, default=0, help='seed for numpy.random.default_rng (PCG64)')
        parser.add_argument('--max-n', type=int, default=DEFAULT_MAX_N, help='largest problem size')
        parser.add_argument('--eps', type=float, default=1e-8, help='tolerance for timing experiments')
        parser.add_argument('--nu', type=int, default=0, help='order for timing experiments')
        parser.add_argument('--with-direct', action='store_true', help='also time direct summation')
        parser.add_argument('--check', action='store_true', help='exit 3 when a rel_err exceeds 10*eps')

    def run(self, **options):
        records = run_experiment(
            options['experiment'],
            seed=options['seed'],
            max_n=options['max_n'],
            eps=options['eps'],
            nu=options['nu'],
            with_direct=options['with_direct'],
        )
        if options['out']:
            write_csv(records, options['out'])
        else:
            buffer = io.StringIO()
            write_csv(records, buffer)
            self.stdout.write(buffer.getvalue(), ending='')

        if options['check']:
            failed = [r for r in records if r.exceeds_tolerance]
            if failed:
                worst = max(failed, key=lambda r: r.rel_err / r.eps)
                raise CommandError(
                    f"{len(failed)} row(s) exceed 10*eps; worst {worst.experiment} n={worst.n} "
                    f"eps={worst.eps:g} rel_err={worst.rel_err:.3e}",
                    returncode=EXIT_NUMERICAL,
                )
