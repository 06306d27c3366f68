"""
Load configuration values from ini files, yaml files and python structures.
Nested dictionaries are flattened using dotted notation, and ini sections
become the first component of a key.

These flattened keys and values are merged into a
:class:`krl.config.ConfigNamespace`.

Examples
--------

The experiment file format is an ini file:

.. code-block:: ini

    [grid]
    n_cells = 400
    x_left = -2.0
    x_right = 2.0

    [experiment]
    kappa = 0.04, 0.02, 0.01
    mode = well_prepared

Later loaders override values from earlier ones, so command line overrides
are applied last:

.. code-block:: python

    from krl import loader

    loader.INIConfiguration('sweep.ini', namespace='krl')
    loader.ListConfiguration(['grid.n_cells=200'], namespace='krl')


Arguments
---------

Configuration loaders accept the following kwargs:

error_on_unknown
    raises a :class:`krl.errors.ConfigurationError` if there are keys
    in the config that have not been defined by a schema.

optional
    if True only logs on failure to load configuration (Default False)

namespace
    load the configuration values into a namespace. Defaults to the
    `DEFAULT` namespace.

flatten
    flatten nested structures into a mapping with depth of 1 (Default True)
"""
import configparser
import logging
import os
from typing import Any
from typing import Callable
from typing import Dict
from typing import Iterator
from typing import List
from typing import Tuple

from krl import config, errors


__all__ = [
    'YamlConfiguration',
    'ListConfiguration',
    'DictConfiguration',
    'INIConfiguration',
    'serialize_ini',
]


log = logging.getLogger(__name__)

ConfigDict = Dict[str, Any]
ConfigLoader = Callable[..., ConfigDict]


def flatten_dict(config_data: ConfigDict) -> Iterator[Tuple[str, Any]]:
    for key, value in config_data.items():
        if hasattr(value, 'items'):
            for k, v in flatten_dict(value):
                yield '{}.{}'.format(key, k), v
            continue

        yield key, value


def load_config_data(
    loader_func: ConfigLoader,
    *args: Any,
    **kwargs: Any
) -> ConfigDict:
    optional = kwargs.pop('optional', False)
    try:
        return loader_func(*args, **kwargs)
    except Exception as e:
        log.info("Optional configuration failed: %s", e)
        if not optional:
            raise
        return {}


def build_loader(loader_func: ConfigLoader) -> ConfigLoader:
    def loader(*args: Any, **kwargs: Any) -> Dict[str, Any]:
        err_on_unknown      = kwargs.pop('error_on_unknown', False)
        err_on_dupe         = kwargs.pop('error_on_duplicate', False)
        flatten             = kwargs.pop('flatten', True)
        name                = kwargs.pop('namespace', config.DEFAULT)

        config_data = load_config_data(loader_func, *args, **kwargs)
        if flatten:
            config_data = dict(flatten_dict(config_data))
        namespace   = config.get_namespace(name)
        namespace.apply_config_data(config_data, err_on_unknown, err_on_dupe)
        return config_data

    return loader


def yaml_loader(filename: str) -> ConfigDict:
    import yaml
    try:
        from yaml import CSafeLoader as SafeLoader
    except ImportError:
        from yaml import SafeLoader  # type: ignore

    with open(filename) as fh:
        return yaml.load(fh, Loader=SafeLoader) or {}


def list_loader(seq: List[str]) -> ConfigDict:
    def split_pair(pair: str) -> Tuple[str, str]:
        if '=' not in pair:
            raise errors.ConfigurationError(
                f"Invalid override, expected key=value: {pair}")
        key, value = pair.split('=', 1)
        return key.strip(), value.strip()
    return dict(split_pair(pair) for pair in seq)


def ini_file_loader(filename: str) -> ConfigDict:
    if not os.path.isfile(filename):
        raise errors.ConfigurationError(f"No such configuration file: {filename}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read([filename])
    except configparser.Error as e:
        raise errors.ConfigurationError(f"Invalid ini file {filename}: {e}")
    config_dict = {}

    for section in parser.sections():
        for key, value in parser.items(section, raw=True):
            config_dict['{}.{}'.format(section, key)] = value

    return config_dict


def ini_text_loader(text: str) -> ConfigDict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string(text)
    return {f'{section}.{key}': value
            for section in parser.sections()
            for key, value in parser.items(section, raw=True)}


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ', '.join(format_value(item) for item in value)
    return str(value)


def serialize_ini(config_data: ConfigDict) -> str:
    """Write flattened configuration back to the ini format. Sections and
    keys are sorted, so ``serialize_ini(ini_text_loader(text))`` is stable.
    """
    sections: Dict[str, Dict[str, str]] = {}
    for dotted_key, value in dict(flatten_dict(config_data)).items():
        if '.' not in dotted_key:
            raise errors.ConfigurationError(
                f"Key {dotted_key} has no section and can not be written")
        section, key = dotted_key.split('.', 1)
        sections.setdefault(section, {})[key] = format_value(value)

    blocks = []
    for section in sorted(sections):
        lines = [f'[{section}]']
        lines.extend(f'{key} = {value}'
                     for key, value in sorted(sections[section].items()))
        blocks.append('\n'.join(lines))
    return '\n\n'.join(blocks) + '\n'


YamlConfiguration = build_loader(yaml_loader)
"""Load configuration from a yaml file (requires the ``yaml`` extra).

:param filename: path to a yaml file
"""

ListConfiguration = build_loader(list_loader)
"""Load configuration from a list of strings in the form `key=value`.

:param seq: a sequence of strings
"""

DictConfiguration = build_loader(lambda d: d)
"""Load configuration from a :class:`dict`.

:param dict: a dictionary
"""

INIConfiguration = build_loader(ini_file_loader)
"""Load configuration from a .ini file

:param filename: path to the ini file
"""
