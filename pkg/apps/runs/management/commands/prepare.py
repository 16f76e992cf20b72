"""
Prepare a thermal state: p-ITE then SR up to beta_target.
Run with: python manage.py prepare config.json --preset desk
Resume with: python manage.py prepare config.json --checkpoint runs/chain8/prepare_latest.json
"""
from apps.runs.management.base import RunCommand


class Command(RunCommand):
    help = 'Prepare a thermofield state by imaginary-time evolution'
    kind = 'prepare'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--checkpoint', help='Prepare checkpoint (.json) to resume from')
