from rest_framework import serializers

from .cross_section import PRESETS
from .montecarlo import STRATIFICATIONS

SUITE_NAMES = [
    'verify-kinematics', 'verify-jacobian', 'verify-cross-section', 'verify-htheorem',
    'verify-kernel-equivalence', 'verify-bounds', 'verify-tail', 'hs-norm', 'spectrum', 'all',
]


class StrictSerializer(serializers.Serializer):
    """
    Rejects keys that are not declared fields. Nested sections listed in
    ``prefill`` are validated as empty objects when omitted, so their own
    defaults apply.
    """
    prefill = ()

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Unknown field.'] for key in unknown})
            data = {**{name: {} for name in self.prefill}, **data}
        return super().to_internal_value(data)


class LawSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=['power', 'two_regime', 'tabulated'], default='power')
    alpha = serializers.FloatField(min_value=0.0, required=False)
    scale = serializers.FloatField(required=False)
    beta1 = serializers.FloatField(min_value=0.0, required=False)
    beta2 = serializers.FloatField(min_value=0.0, required=False)
    c_low = serializers.FloatField(required=False)
    c_high = serializers.FloatField(required=False)
    declared_beta1 = serializers.FloatField(min_value=0.0, required=False)
    declared_beta2 = serializers.FloatField(min_value=0.0, required=False)
    grid = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=2, required=False)
    values = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=2, required=False)
    tail_exponent = serializers.FloatField(required=False)
    head_exponent = serializers.FloatField(required=False)

    def validate_scale(self, value):
        if value <= 0:
            raise serializers.ValidationError('scale must be positive')
        return value

    def validate(self, attrs):
        kind = attrs.get('kind', 'power')
        if kind == 'tabulated':
            if 'grid' not in attrs or 'values' not in attrs:
                raise serializers.ValidationError('a tabulated law needs grid and values')
            if len(attrs['grid']) != len(attrs['values']):
                raise serializers.ValidationError('grid and values must have the same length')
        for key in ('c_low', 'c_high'):
            if key in attrs and attrs[key] <= 0:
                raise serializers.ValidationError({key: 'must be positive'})
        return attrs


class KineticSerializer(StrictSerializer):
    family = serializers.ChoiceField(choices=['power', 'interpolated', 'singular_sine'], default='power')
    exponent = serializers.FloatField(required=False)
    alpha = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    gamma1 = serializers.FloatField(required=False)
    gamma2 = serializers.FloatField(min_value=0.0, required=False)

    def validate_gamma2(self, value):
        if value >= 0.5:
            raise serializers.ValidationError('gamma2 must be below 1/2')
        return value


class InternalSerializer(StrictSerializer):
    family = serializers.ChoiceField(choices=['normalized_power', 'linear_combination', 'asymmetric'],
                                     default='normalized_power')
    gamma = serializers.FloatField(min_value=0.0, required=False)
    terms = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        min_length=1, required=False
    )


class CrossSectionSerializer(StrictSerializer):
    preset = serializers.ChoiceField(choices=sorted(PRESETS), required=False)
    kinetic = KineticSerializer(required=False)
    internal = InternalSerializer(required=False)
    delta1 = serializers.FloatField(min_value=0.0, default=0.0)
    delta2 = serializers.FloatField(min_value=0.0, default=0.0)
    gamma = serializers.FloatField(min_value=0.0, default=0.0)
    envelope_constant = serializers.FloatField(default=1.0)
    exchange = serializers.FloatField(min_value=0.0, default=0.0)
    scale = serializers.FloatField(min_value=0.0, default=1.0)

    def validate(self, attrs):
        errors = {}
        if attrs['delta1'] >= 1.0:
            errors['delta1'] = 'delta1 must lie in [0, 1)'
        if attrs['delta2'] >= 0.5:
            errors['delta2'] = 'delta2 must lie in [0, 1/2)'
        if attrs['gamma'] >= 2.0:
            errors['gamma'] = 'gamma must lie in [0, 2)'
        if attrs['exchange'] >= 1.0:
            errors['exchange'] = 'exchange weight must lie in [0, 1)'
        if attrs['envelope_constant'] <= 0:
            errors['envelope_constant'] = 'envelope constant must be positive'
        if errors:
            raise serializers.ValidationError(errors)
        return attrs


class MaxwellianSerializer(StrictSerializer):
    n = serializers.FloatField(default=1.0)
    u = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3,
                              default=[0.0, 0.0, 0.0])
    T_k = serializers.FloatField(default=1.0)
    T_i = serializers.FloatField(default=1.0)
    k_B = serializers.FloatField(default=1.0)

    def validate(self, attrs):
        for key in ('n', 'T_k', 'T_i', 'k_B'):
            if attrs[key] <= 0:
                raise serializers.ValidationError({key: 'must be positive'})
        if any(attrs['u']):
            raise serializers.ValidationError({'u': 'the linearization point must be centered'})
        return attrs


class MonteCarloSerializer(StrictSerializer):
    samples = serializers.IntegerField(min_value=1, default=1_000_000)
    seed = serializers.IntegerField(min_value=0, required=False)
    shards = serializers.IntegerField(min_value=1, required=False)
    threads = serializers.IntegerField(min_value=1, required=False)
    stratification = serializers.ChoiceField(choices=list(STRATIFICATIONS), default='none')
    n_sigma = serializers.FloatField(min_value=0.5, default=3.0)


class QuadratureSerializer(StrictSerializer):
    psi_order = serializers.IntegerField(min_value=2, default=32)
    radial_order = serializers.IntegerField(min_value=2, default=48)
    polar_order = serializers.IntegerField(min_value=2, default=32)
    azimuth_order = serializers.IntegerField(min_value=2, default=16)
    energy_order = serializers.IntegerField(min_value=2, default=24)
    hs_rel_tol = serializers.FloatField(default=1e-4)
    hs_levels = serializers.IntegerField(min_value=2, default=6)

    def validate_hs_rel_tol(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('relative tolerance must lie in (0, 1)')
        return value


class LinearizationSerializer(StrictSerializer):
    a = serializers.FloatField(default=0.25)
    alpha = serializers.FloatField(default=0.2)


class GalerkinSerializer(StrictSerializer):
    velocity_modes = serializers.IntegerField(min_value=1, default=6)
    energy_modes = serializers.IntegerField(min_value=1, default=4)
    enriched_velocity_modes = serializers.IntegerField(min_value=1, default=8)
    enriched_energy_modes = serializers.IntegerField(min_value=1, default=6)
    order = serializers.IntegerField(min_value=4, default=40)

    def validate(self, attrs):
        if (attrs['enriched_velocity_modes'] < attrs['velocity_modes']
                or attrs['enriched_energy_modes'] < attrs['energy_modes']):
            raise serializers.ValidationError('the enriched basis must contain the base basis')
        return attrs


class ChecksSerializer(StrictSerializer):
    prefill = ('galerkin',)

    points = serializers.IntegerField(min_value=1, default=20)
    collisions = serializers.IntegerField(min_value=1, default=100_000)
    tensor_samples = serializers.IntegerField(min_value=1, default=10_000)
    tail_radii = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=2,
                                       default=[2.0, 4.0, 8.0, 16.0])
    shift_ladder = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=2,
                                         default=[1.0, 0.5, 0.25, 0.125])
    translation_radius = serializers.FloatField(min_value=0.0, default=2.0)
    epsilon = serializers.FloatField(min_value=0.0, default=1e-3)
    phi_alphas = serializers.ListField(child=serializers.FloatField(), min_length=1, required=False)
    galerkin = GalerkinSerializer(required=False)

    def validate_shift_ladder(self, value):
        if any(h <= 0 for h in value):
            raise serializers.ValidationError('shifts must be positive')
        return value

    def validate_phi_alphas(self, value):
        if any(not -1.0 < a <= 1.0 for a in value):
            raise serializers.ValidationError('phi_alpha exponents must lie in (-1, 1]')
        return value


class RunConfigSerializer(StrictSerializer):
    """Complete run configuration; every section falls back to its defaults"""
    prefill = ('law', 'cross_section', 'maxwellian', 'monte_carlo', 'quadrature', 'linearization',
               'checks')

    law = LawSerializer(required=False)
    cross_section = CrossSectionSerializer(required=False)
    maxwellian = MaxwellianSerializer(required=False)
    monte_carlo = MonteCarloSerializer(required=False)
    quadrature = QuadratureSerializer(required=False)
    linearization = LinearizationSerializer(required=False)
    checks = ChecksSerializer(required=False)
    suite = serializers.ChoiceField(choices=SUITE_NAMES, required=False)
    out = serializers.CharField(required=False)

    def validate(self, attrs):
        gamma = attrs['cross_section']['gamma']
        a = attrs['linearization']['a']
        alpha = attrs['linearization']['alpha']
        if not 0.0 < a < 1.0 - 0.5 * gamma:
            raise serializers.ValidationError({'linearization': f'a must lie in (0, {1.0 - 0.5 * gamma:g})'})
        if gamma == 0.0 and not 0.0 < alpha < 0.5 * (1.0 - a):
            raise serializers.ValidationError(
                {'linearization': f'alpha must lie in (0, {0.5 * (1.0 - a):g}) when gamma = 0'})
        return attrs
