"""
Swap the lab configuration inside tests.

.. code-block:: python

    from krl import settings, testing

    with testing.MockConfiguration({'grid': {'n_cells': 64}}):
        assert settings.grid_config.n_cells == 64

Keys unknown to the schemas raise :class:`krl.errors.ConfigurationError`
unless ``validate=False`` is passed.
"""
import copy
from typing import Any
from typing import Dict
from typing import Optional

from krl import config, loader


NAMESPACE = 'krl'


class MockConfiguration:
    """Replace the values of a namespace while inside the context and
    restore the previous values on exit.

    :param namespace: the namespace to patch, ``krl`` by default
    :param flatten: flatten nested dictionaries to dotted keys (default True)
    :param validate: reject keys no schema declares (default True)
    """

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        name                = kwargs.pop('namespace', NAMESPACE)
        flatten             = kwargs.pop('flatten', True)
        self.validate       = kwargs.pop('validate', True)
        config_data         = dict(*args, **kwargs)
        self.namespace      = config.get_namespace(name)
        self.config_data    = (dict(loader.flatten_dict(config_data)) if flatten
                               else config_data)
        self.old_values: Optional[Dict[str, Any]] = None

    def new_values(self) -> Dict[str, Any]:
        return dict(self.config_data)

    def setup(self) -> None:
        if self.validate:
            self.namespace.validate_keys(self.config_data, True)
        self.old_values = copy.deepcopy(dict(self.namespace.get_config_values()))
        self.reset_namespace(self.new_values())
        config.reload(name=self.namespace.name)

    def teardown(self) -> None:
        self.reset_namespace(self.old_values)
        config.reload(name=self.namespace.name)

    def reset_namespace(self, values: Optional[Dict[str, Any]]) -> None:
        self.namespace.clear()
        self.namespace.update_values(values or {})

    def __enter__(self) -> None:
        return self.setup()

    def __exit__(self, *args: Any) -> None:
        self.teardown()


class PatchConfiguration(MockConfiguration):
    """Like :class:`MockConfiguration` but keeps every key of the namespace
    that is not overridden.
    """

    def new_values(self) -> Dict[str, Any]:
        values = copy.deepcopy(self.old_values or {})
        values.update(self.config_data)
        return values
