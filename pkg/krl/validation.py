"""
Validate a configuration value by converting it to a specific type.

These functions are used by :mod:`krl.schema` to coerce config values to a
type. Values read from an ini file are always strings, so every validator
accepts the string form of its type.
"""
import logging
from typing import Any
from typing import Callable
from typing import Dict
from typing import ItemsView
from typing import List
from typing import Optional
from typing import Tuple
from typing import TypeVar

from krl.errors import ValidationError


Validator = Callable[[Any], Any]
T = TypeVar("T")


def validate_string(value: Any) -> Optional[str]:
    return None if value is None else str(value).strip()


true_values  = {'true', 'yes', 'on', '1'}
false_values = {'false', 'no', 'off', '0'}


def validate_bool(value: Any) -> Optional[bool]:
    if value is None or isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in true_values:
        return True
    if text in false_values:
        return False
    raise ValidationError(f"Invalid bool: {value}")


def validate_numeric(type_func: Callable[[Any], float], value: Any) -> float:
    try:
        return type_func(value)
    except (TypeError, ValueError):
        raise ValidationError(f"Invalid {type_func.__name__}: {value}")


def validate_int(value: Any) -> int:
    return int(validate_numeric(int, value))


def validate_float(value: Any) -> float:
    return validate_numeric(float, value)


def validate_positive_float(value: Any) -> float:
    number = validate_float(value)
    if not number > 0:
        raise ValidationError(f"Expected a positive number: {value}")
    return number


def _split_items(value: Any) -> List[Any]:
    if isinstance(value, str):
        return [item.strip() for item in value.split(',') if item.strip()]
    try:
        return list(value)
    except TypeError:
        raise ValidationError("Invalid iterable: %s" % (value,))


def validate_list(value: Any) -> List[Any]:
    """Accept a sequence, or a comma separated string."""
    return _split_items(value)


def build_list_type_validator(
    item_validator: Validator
) -> Callable[[Any], List[Any]]:
    """Return a function which validates that the value is a list of items
    which are validated using item_validator.
    """
    def validate_list_of_type(value: Any) -> List[Any]:
        return [item_validator(item) for item in validate_list(value)]
    return validate_list_of_type


validate_float_list = build_list_type_validator(validate_float)


def validate_kappa_list(value: Any) -> List[float]:
    """A list of Knudsen numbers: positive and strictly decreasing."""
    kappas = [validate_positive_float(item) for item in validate_list(value)]
    if not kappas:
        raise ValidationError("Empty kappa list")
    if any(b >= a for a, b in zip(kappas, kappas[1:])):
        raise ValidationError(f"kappa list must be strictly decreasing: {kappas}")
    return kappas


def build_choice_validator(name: str, choices: Tuple[str, ...]) -> Validator:
    def validate_choice(value: Any) -> str:
        text = str(value).strip().lower()
        if text not in choices:
            raise ValidationError(
                f"Invalid {name}: {value}, expected one of {', '.join(choices)}")
        return text
    validate_choice.__name__ = f'validate_{name}'
    return validate_choice


validate_mode           = build_choice_validator('mode', ('sharp', 'well_prepared'))
validate_pattern_kind   = build_choice_validator(
    'pattern', ('scs', 'rcs', 'single3'))
validate_boundary       = build_choice_validator('boundary', ('fixed', 'periodic'))
validate_first_wave     = build_choice_validator('wave', ('shock', 'rarefaction'))


def validate_log_level(value: Any) -> int:
    """Validate a log level from a string value. Returns a constant from
    the :mod:`logging` module.
    """
    if isinstance(value, int):
        return value
    level = getattr(logging, str(value).strip().upper(), None)
    if not isinstance(level, int):
        raise ValidationError(f"Unknown log level: {value}")
    return level


def validate_any(value: Any) -> Any:
    return value


validators: Dict[str, Validator] = {
    '':              validate_any,
    'bool':          validate_bool,
    'float':         validate_float,
    'positive':      validate_positive_float,
    'int':           validate_int,
    'string':        validate_string,
    'log_level':     validate_log_level,
    'kappa_list':    validate_kappa_list,
    'mode':          validate_mode,
    'pattern':       validate_pattern_kind,
    'boundary':      validate_boundary,
    'first_wave':    validate_first_wave,
}


def get_validators() -> ItemsView[str, Validator]:
    """Return an iterator of (validator_name, validator) pairs."""
    return validators.items()
