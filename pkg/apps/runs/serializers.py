from rest_framework import serializers

from apps.ansatz.base import Architecture
from apps.evolution.integrators import Integrator
from apps.evolution.state import Backend
from apps.lattice.lattice import Boundary, LatticeKind
from apps.observables.estimators import Reduction

from .models import RunCheckpoint, SimulationRun


def _choices(enum):
    return [member.value for member in enum]


class SamplerSettingsSerializer(serializers.Serializer):
    n_chains = serializers.IntegerField(min_value=1, required=False)
    sweep_factor = serializers.IntegerField(min_value=1, required=False)
    burn_in = serializers.IntegerField(min_value=0, required=False)
    workers = serializers.IntegerField(min_value=1, required=False)
    direct = serializers.BooleanField(required=False)


class PiteSettingsSerializer(serializers.Serializer):
    kernel_base = serializers.FloatField(required=False)
    max_iterations = serializers.IntegerField(min_value=1, required=False)
    learning_rate = serializers.FloatField(required=False)
    momentum = serializers.FloatField(min_value=0.0, max_value=0.999, required=False)
    propagator_order = serializers.IntegerField(min_value=0, max_value=4, required=False)
    infidelity_threshold = serializers.FloatField(required=False)
    n_samples = serializers.IntegerField(min_value=1, required=False)

    def validate_kernel_base(self, value):
        if value <= 1.0:
            raise serializers.ValidationError('kernel base must exceed 1')
        return value


class SegmentSerializer(serializers.Serializer):
    step = serializers.FloatField()
    integrator = serializers.ChoiceField(choices=_choices(Integrator), required=False)
    svd_atol = serializers.FloatField(required=False)
    samples_per_step = serializers.IntegerField(min_value=1, required=False)
    backend = serializers.ChoiceField(choices=_choices(Backend), required=False)
    sampler = SamplerSettingsSerializer(required=False)
    pite = PiteSettingsSerializer(required=False)
    max_retries = serializers.IntegerField(min_value=0, required=False)
    energy_jump_factor = serializers.FloatField(required=False)
    retry_step_factor = serializers.FloatField(min_value=0.01, max_value=0.99, required=False)
    energy_floor = serializers.FloatField(min_value=0.0, required=False)

    def validate_step(self, value):
        if value <= 0:
            raise serializers.ValidationError('step must be positive')
        return value

    def validate_svd_atol(self, value):
        if value <= 0:
            raise serializers.ValidationError('svd_atol must be positive')
        return value


class SegmentsSerializer(serializers.Serializer):
    pite = SegmentSerializer()
    sr = SegmentSerializer()
    tvmc = SegmentSerializer()


class LatticeSpecSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=_choices(LatticeKind))
    extent = serializers.JSONField()
    boundary = serializers.ChoiceField(choices=_choices(Boundary), default=Boundary.PERIODIC.value)

    def validate_extent(self, value):
        if isinstance(value, bool):
            raise serializers.ValidationError('extent must be an integer or a list of integers')
        if isinstance(value, int):
            return value
        if isinstance(value, list) and value and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            return tuple(value)
        raise serializers.ValidationError('extent must be an integer or a list of integers')


class ModelSpecSerializer(serializers.Serializer):
    J = serializers.FloatField(default=1.0)
    h_T = serializers.FloatField(default=0.0)
    h_L = serializers.FloatField(default=0.0)


class AnsatzSpecSerializer(serializers.Serializer):
    architecture = serializers.ChoiceField(choices=_choices(Architecture))
    alpha = serializers.IntegerField(min_value=1, default=1)
    hidden_size = serializers.IntegerField(min_value=1, default=8)
    sigma_init = serializers.FloatField(min_value=0.0, default=0.01)
    mean_field = serializers.BooleanField(default=False)

    def validate(self, attrs):
        if attrs['architecture'] == Architecture.MEAN_FIELD.value:
            raise serializers.ValidationError('use mean_field: true with an auxiliary-Z network')
        if attrs.get('mean_field') and attrs['architecture'] == Architecture.ARNNO_X.value:
            raise serializers.ValidationError('the pair factor needs an auxiliary-Z network')
        return attrs


class MettsSettingsSerializer(serializers.Serializer):
    n_samples = serializers.IntegerField(min_value=1, default=10000)
    n_chains = serializers.IntegerField(min_value=1, default=1)
    discard = serializers.IntegerField(min_value=0, default=100)


class ObservablesSerializer(serializers.Serializer):
    pair_mode = serializers.ChoiceField(
        choices=[Reduction.SINGLE_PAIR.value, Reduction.BOND_AVERAGE.value],
        default=Reduction.BOND_AVERAGE.value,
    )


class RunConfigSerializer(serializers.Serializer):
    """Validates a run configuration already merged with its preset."""
    preset = serializers.CharField()
    seed = serializers.IntegerField(min_value=0, default=0)
    output_dir = serializers.CharField(required=False, allow_blank=True, default='')
    lattice = LatticeSpecSerializer()
    model = ModelSpecSerializer()
    quench = ModelSpecSerializer(required=False, allow_null=True, default=None)
    ansatz = AnsatzSpecSerializer()
    backend = serializers.ChoiceField(choices=_choices(Backend), default=Backend.SAMPLED.value)
    sampler = SamplerSettingsSerializer(required=False)
    segments = SegmentsSerializer()
    beta_target = serializers.FloatField(min_value=0.0)
    t_target = serializers.FloatField(min_value=0.0, default=0.0)
    pite_until = serializers.FloatField(min_value=0.0, default=0.1)
    checkpoint_betas = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=list)
    checkpoint_every = serializers.IntegerField(min_value=1, default=100)
    record_every = serializers.IntegerField(min_value=1, default=1)
    observables = ObservablesSerializer(required=False)
    metts = MettsSettingsSerializer(required=False)

    def validate(self, attrs):
        if attrs.get('t_target', 0.0) > 0 and not attrs.get('quench'):
            raise serializers.ValidationError({'quench': 'a quench model is required when t_target > 0'})
        return attrs


class RunCheckpointSerializer(serializers.ModelSerializer):
    class Meta:
        model = RunCheckpoint
        fields = ['id', 'path', 'segment', 'beta', 't', 'step_index', 'created_at']


class SimulationRunSerializer(serializers.ModelSerializer):
    checkpoints = RunCheckpointSerializer(many=True, read_only=True)

    class Meta:
        model = SimulationRun
        fields = ['id', 'kind', 'status', 'config', 'seed', 'output_dir', 'series_path',
                  'beta', 't', 'error_message', 'checkpoints', 'created_at', 'updated_at', 'completed_at']


class RunSubmitSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[k for k, _ in SimulationRun.KIND_CHOICES])
    config = serializers.JSONField()
    preset = serializers.CharField(required=False)
    checkpoint = serializers.CharField(required=False)

    def validate(self, attrs):
        if attrs['kind'] == 'evolve' and not attrs.get('checkpoint'):
            raise serializers.ValidationError({'checkpoint': 'evolve runs start from a checkpoint'})
        return attrs
