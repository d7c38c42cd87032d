"""
Validation of the run configuration file, one serializer per [section].

Values arrive as INI strings (or native values from the built-in defaults);
the serializers convert and check them. Keys a section does not know are
rejected instead of being ignored.
"""
import math

from rest_framework import serializers
from rest_framework.fields import empty

from core.exceptions import ConfigurationError
from networks.activations import ACTIVATIONS
from problems.equations import PROBLEMS
from training.optim import validate_schedule
from training.trainer import OPTIMIZERS

GATES = ('grid', 'table')
SURFACE_KEYS = ('surface_h', 'surface_dt', 'surface_t_max')


def format_schedule(schedule):
    return ', '.join(f"{start}:{lr!r}" for start, lr in schedule)


def format_counts(counts):
    return ', '.join(str(count) for count in counts)


def _finite(value):
    if not math.isfinite(value):
        raise serializers.ValidationError('must be a finite number.')
    return value


def _below_one(value):
    if not value < 1:
        raise serializers.ValidationError('must be below 1.')
    return value


def _positive(value):
    if not (math.isfinite(value) and value > 0):
        raise serializers.ValidationError('must be a positive finite number.')
    return value


class ScheduleField(serializers.Field):
    """Piecewise-constant learning rate written as "start:lr, start:lr, ..."."""

    default_error_messages = {
        'invalid': 'expected "start:lr, start:lr, ..." with increasing integer starts, the first 0.',
    }

    def to_internal_value(self, data):
        if isinstance(data, str):
            try:
                pairs = []
                for item in data.split(','):
                    start, lr = item.split(':')
                    pairs.append((int(start), float(lr)))
            except ValueError:
                self.fail('invalid')
        else:
            pairs = data
        try:
            return validate_schedule(pairs)
        except ConfigurationError as e:
            raise serializers.ValidationError(str(e)) from None

    def to_representation(self, value):
        return format_schedule(value)


class CountsField(serializers.Field):
    default_error_messages = {
        'invalid': 'expected increasing positive integers separated by commas.',
    }

    def to_internal_value(self, data):
        try:
            if isinstance(data, str):
                counts = tuple(int(item) for item in data.split(','))
            else:
                counts = tuple(int(item) for item in data)
        except (TypeError, ValueError):
            self.fail('invalid')
        if len(counts) < 2 or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
            self.fail('invalid')
        return counts

    def to_representation(self, value):
        return format_counts(value)


class OptionalFloatField(serializers.FloatField):
    """A float, or a blank value for "not set"."""

    def __init__(self, **kwargs):
        kwargs.setdefault('allow_null', True)
        super().__init__(**kwargs)

    def run_validation(self, data=empty):
        if isinstance(data, str) and not data.strip():
            data = None
        return super().run_validation(data)


class SectionSerializer(serializers.Serializer):
    def to_internal_value(self, data):
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            expected = ', '.join(self.fields)
            raise serializers.ValidationError(
                {key: [f'unknown key; expected one of {expected}.'] for key in unknown})
        return super().to_internal_value(data)


class ProblemSerializer(SectionSerializer):
    name = serializers.ChoiceField(choices=PROBLEMS)
    lam = serializers.FloatField(validators=[_finite])


class NetworkSerializer(SectionSerializer):
    hidden_layers = serializers.IntegerField(min_value=1)
    width = serializers.IntegerField(min_value=1)
    activation = serializers.ChoiceField(choices=sorted(ACTIVATIONS))


class SamplingSerializer(SectionSerializer):
    n0 = serializers.IntegerField(min_value=1)
    nb = serializers.IntegerField(min_value=2)
    nc = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)

    def validate_nb(self, value):
        if value % 2:
            raise serializers.ValidationError('must be even (half the points on each boundary).')
        return value


class TrainingSerializer(SectionSerializer):
    iterations = serializers.IntegerField(min_value=0)
    schedule = ScheduleField()
    alpha = serializers.FloatField(min_value=0, validators=[_finite])
    beta = serializers.FloatField(min_value=0, validators=[_finite])
    gamma = serializers.FloatField(min_value=0, validators=[_finite])
    beta1 = serializers.FloatField(min_value=0, validators=[_below_one])
    beta2 = serializers.FloatField(min_value=0, validators=[_below_one])
    epsilon = serializers.FloatField(validators=[_positive])
    optimizer = serializers.ChoiceField(choices=OPTIMIZERS)
    log_every = serializers.IntegerField(min_value=1)

    def validate(self, attrs):
        if not any((attrs['alpha'], attrs['beta'], attrs['gamma'])):
            raise serializers.ValidationError({'gamma': ['alpha, beta and gamma cannot all be zero.']})
        return attrs


class EvaluationSerializer(SectionSerializer):
    h = serializers.FloatField(validators=[_positive])
    dt = serializers.FloatField(validators=[_positive])
    max_error = serializers.FloatField(validators=[_positive])
    gate = serializers.ChoiceField(choices=GATES)
    benchmark_counts = CountsField()
    benchmark_repeats = serializers.IntegerField(min_value=1)
    min_r_squared = serializers.FloatField(min_value=0, max_value=1)
    surface_h = OptionalFloatField(validators=[_positive])
    surface_dt = OptionalFloatField(validators=[_positive])
    surface_t_max = OptionalFloatField(validators=[_positive])

    def validate(self, attrs):
        surface = [attrs.get(key) for key in SURFACE_KEYS]
        if any(value is None for value in surface) and any(value is not None for value in surface):
            raise serializers.ValidationError(
                {'surface_t_max': [f"set all of {', '.join(SURFACE_KEYS)} or leave all blank."]})
        return attrs


class OutputSerializer(SectionSerializer):
    directory = serializers.CharField(allow_blank=True, trim_whitespace=True)


SECTION_SERIALIZERS = {
    'problem': ProblemSerializer,
    'network': NetworkSerializer,
    'sampling': SamplingSerializer,
    'training': TrainingSerializer,
    'evaluation': EvaluationSerializer,
    'output': OutputSerializer,
}


def validate_section(section, values):
    """Validated values of one section, or ConfigurationError("[section] key: message")."""
    serializer = SECTION_SERIALIZERS[section](data=values)
    if serializer.is_valid():
        return dict(serializer.validated_data)
    problems = []
    for key, messages in serializer.errors.items():
        for message in messages if isinstance(messages, list) else [messages]:
            problems.append(f"[{section}] {key}: {message}")
    raise ConfigurationError('; '.join(problems))
