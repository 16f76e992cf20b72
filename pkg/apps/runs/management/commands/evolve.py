"""
Quench a prepared state with t-VMC.
Run with: python manage.py evolve config.json runs/chain8/prepare_final.json
"""
from apps.runs.management.base import RunCommand


class Command(RunCommand):
    help = 'Evolve a checkpointed state in real time under the quench Hamiltonian'
    kind = 'evolve'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('checkpoint', help='Checkpoint (.json) to start or resume from')
