"""
manage.py tables：预热、导出或载入 (ν, ε, M) → (z, L) 参数表
"""

import logging

from django.core.management.base import CommandError

from core.management.base import EXIT_USAGE, NufhtCommand
from services.bounds import param_table

logger = logging.getLogger(__name__)


class Command(NufhtCommand):
    help = 'Warm, dump or load the crossover parameter table'

    def add_arguments(self, parser):
        parser.add_argument('--warm', action='store_true', help='compute every (nu, eps decade) entry')
        parser.add_argument('--dump', metavar='FILE', help='write the table as nu,eps_decade,M,z,L lines')
        parser.add_argument('--load', metavar='FILE', help='read and validate a dumped table')

    def run(self, **options):
        if not (options['warm'] or options['dump'] or options['load']):
            raise CommandError('nothing to do: pass --warm, --dump FILE or --load FILE', returncode=EXIT_USAGE)

        if options['load']:
            count = param_table.load(options['load'])
            self.stdout.write(f"loaded {count} rows from {options['load']}")
        if options['warm']:
            before = len(param_table)
            total = param_table.warm()
            self.stdout.write(f"table warm: {total} rows ({total - before} computed)")
        if options['dump']:
            count = param_table.dump(options['dump'])
            self.stdout.write(f"dumped {count} rows to {options['dump']}")
