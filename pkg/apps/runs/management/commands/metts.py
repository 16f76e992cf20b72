from apps.runs.management.base import RunCommand


class Command(RunCommand):
    help = 'Thermal reference values by minimally entangled typical thermal states'
    kind = 'metts'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--samples', type=int, help='Samples per run (after discarding)')
        parser.add_argument('--chains', type=int, help='Independent chains')

    def overrides(self, options):
        metts = {k: options[opt] for k, opt in (('n_samples', 'samples'), ('n_chains', 'chains'))
                 if options.get(opt) is not None}
        overrides = super().overrides(options)
        if metts:
            overrides['metts'] = metts
        return overrides
