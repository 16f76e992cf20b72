from apps.runs.management.base import RunCommand


class Command(RunCommand):
    help = 'Exact thermal values and exact quench dynamics for small systems'
    kind = 'ed'
    queueable = False
