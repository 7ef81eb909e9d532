"""
manage.py transform：从文件读入频率、点与系数，写出 g_j = Σ c_k J_ν(ω_j r_k)
"""

import logging

from core.array_files import read_array, write_array
from core.management.base import NufhtCommand
from services.transform import build_plan

logger = logging.getLogger(__name__)


class Command(NufhtCommand):
    help = 'Evaluate a nonuniform Hankel transform of order nu on files of frequencies, points and coefficients'

    def add_arguments(self, parser):
        parser.add_argument('--nu', type=int, required=True, help='integer order, 0..100')
        parser.add_argument('--eps', type=float, default=1e-8, help='tolerance in [1e-15, 1e-4]')
        parser.add_argument('--freqs', required=True, help='frequency file')
        parser.add_argument('--points', required=True, help='point file')
        parser.add_argument('--coeffs', required=True, help='coefficient file, one per point')
        parser.add_argument('--out', required=True, help='output file')
        parser.add_argument('--min-size', type=int, default=None, help='dense block area threshold')
        parser.add_argument('--format', choices=('text', 'binary'), default=None,
                            help='file format for all files; detected from the extension when omitted')

    def run(self, **options):
        fmt = options['format']
        freqs = read_array(options['freqs'], fmt)
        points = read_array(options['points'], fmt)
        coeffs = read_array(options['coeffs'], fmt)
        logger.info("transform: nu=%d eps=%g m=%d n=%d", options['nu'], options['eps'], freqs.size, points.size)

        plan = build_plan(options['nu'], options['eps'], freqs, points, min_size=options['min_size'])
        write_array(options['out'], plan.apply(coeffs), fmt)
        self.stdout.write(f"wrote {plan.m} values to {options['out']}")
