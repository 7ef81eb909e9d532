"""
manage.py disk_ft：单位圆盘指示函数的二维 Fourier 变换，与 2π J_1(ω)/ω 对照
"""

import csv
import io
import logging

import numpy as np

from core.management.base import NufhtCommand
from services.applications import RadialFourierJob, disk_indicator_transform, radial_fourier_disk

logger = logging.getLogger(__name__)


class Command(NufhtCommand):
    help = 'Fourier transform of the unit-disk indicator on n equispaced frequencies in (0, omega_max]'

    def add_arguments(self, parser):
        parser.add_argument('--omega-max', type=float, default=1024.0)
        parser.add_argument('--n', type=int, default=10000)
        parser.add_argument('--eps', type=float, default=1e-12)
        parser.add_argument('--out', default=None, help='CSV file; stdout when omitted')

    def run(self, **options):
        n, omega_max = options['n'], options['omega_max']
        if n < 1 or not omega_max > 0:
            raise ValueError(f"--n and --omega-max must be positive, got n={n}, omega_max={omega_max}")
        freqs = omega_max * np.arange(1, n + 1) / n
        job = RadialFourierJob(f=np.ones_like, freqs=freqs, eps=options['eps'])
        values = radial_fourier_disk(job)
        exact = disk_indicator_transform(freqs)
        errors = np.abs(values - exact)
        logger.info("disk_ft: n=%d omega_max=%g max abs error %.3e", n, omega_max, errors.max())

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['omega', 'value', 'exact', 'abs_err'])
        for row in zip(freqs, values, exact, errors):
            writer.writerow([f"{v:.17g}" for v in row])
        if options['out']:
            with open(options['out'], 'w', encoding='utf-8', newline='') as handle:
                handle.write(buffer.getvalue())
            self.stdout.write(f"max_abs_err={errors.max():.3e}")
        else:
            self.stdout.write(buffer.getvalue(), ending='')
