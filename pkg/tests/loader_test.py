import tempfile
import textwrap

import pytest

from testing.testifycompat import (
    assert_equal,
    assert_raises,
    assert_raises_and_contains,
    mock,
)
from krl import loader, errors


class LoaderTestCase:

    content = None

    @pytest.fixture(autouse=True)
    def mock_config(self):
        with mock.patch('krl.loader.config') as self.mock_config:
            yield

    @pytest.fixture(autouse=True)
    def content_to_file(self):
        self.write_content_to_file()

    def write_content_to_file(self, content=None, suffix='.ini'):
        content = content or self.content
        if not content:
            return
        self.tmpfile = tempfile.NamedTemporaryFile(suffix=suffix)
        self.tmpfile.write(content.encode('utf8'))
        self.tmpfile.flush()


class TestListConfiguration(LoaderTestCase):

    def test_loader(self):
        overrides = ['grid.n_cells=200', 'experiment.kappa = 0.04, 0.02']
        expected = {'grid.n_cells': '200', 'experiment.kappa': '0.04, 0.02'}
        config_data = loader.ListConfiguration(overrides)
        assert_equal(config_data, expected)

    def test_missing_equals(self):
        assert_raises_and_contains(
            errors.ConfigurationError, 'key=value',
            loader.ListConfiguration, ['grid.n_cells'])


class TestFlattenDict(LoaderTestCase):

    source = {
        'zero': 0,
        'grid': {
            'n_cells': 1,
            'velocity': {
                'radius': 2
            }
        },
    }

    expected = {
        'zero': 0,
        'grid.n_cells': 1,
        'grid.velocity.radius': 2
    }

    def test_flatten(self):
        actual = dict(loader.flatten_dict(self.source))
        assert_equal(actual, self.expected)


class TestBuildLoader(LoaderTestCase):

    def test_build_loader(self):
        loader_func = mock.Mock()
        assert callable(loader.build_loader(loader_func))

    def test_build_loader_optional(self):
        err_msg = "Failed to do"
        loader_func = mock.Mock()
        loader_func.side_effect = ValueError(err_msg)
        config_loader = loader.build_loader(loader_func)

        config_loader(optional=True)
        assert_raises(ValueError, config_loader)

    def test_build_loader_without_flatten(self):
        source = {'grid': {'n_cells': '4', 'x_left': '-1'}}
        loader_func = mock.Mock(return_value=source)
        config_loader = loader.build_loader(loader_func)

        config = config_loader(source, flatten=False)
        assert_equal(config, source)

    def test_build_loader_applies_to_namespace(self):
        config_loader = loader.build_loader(lambda d: d)
        config_loader({'a': {'b': 1}}, namespace='krl', error_on_unknown=True)
        self.mock_config.get_namespace.assert_called_with('krl')
        namespace = self.mock_config.get_namespace.return_value
        namespace.apply_config_data.assert_called_with({'a.b': 1}, True, False)


class TestYamlConfiguration(LoaderTestCase):

    content = textwrap.dedent("""
        grid:
            n_cells: 200
        experiment:
            mode: sharp
    """)

    def test_loader(self):
        pytest.importorskip('yaml')
        config_data = loader.YamlConfiguration(self.tmpfile.name)
        assert_equal(config_data['grid.n_cells'], 200)
        assert_equal(config_data['experiment.mode'], 'sharp')


class TestINIConfiguration(LoaderTestCase):

    content = textwrap.dedent("""
        [grid]
        n_cells = 400
        x_left = -2.0

        [experiment]
        kappa = 0.04, 0.02, 0.01
        out = results/sweep one
    """)

    def test_ini_configuration(self):
        config_data = loader.INIConfiguration(self.tmpfile.name)
        assert_equal(config_data['grid.n_cells'], '400')
        assert_equal(config_data['experiment.kappa'], '0.04, 0.02, 0.01')
        assert_equal(config_data['experiment.out'], 'results/sweep one')

    def test_missing_file(self):
        assert_raises_and_contains(
            errors.ConfigurationError, 'No such configuration file',
            loader.INIConfiguration, '/nonexistent/lab.ini')

    def test_invalid_file(self):
        self.write_content_to_file("n_cells = 4\n")
        assert_raises(errors.ConfigurationError,
                      loader.INIConfiguration, self.tmpfile.name)


class TestSerializeINI:

    text = textwrap.dedent("""
        [solver]
        strang = false
        cfl = 0.4

        [experiment]
        kappa = 0.04, 0.02, 0.01
    """)

    def test_round_trip_idempotent(self):
        once = loader.serialize_ini(loader.ini_text_loader(self.text))
        twice = loader.serialize_ini(loader.ini_text_loader(once))
        assert_equal(once, twice)

    def test_sorted_sections(self):
        text = loader.serialize_ini(loader.ini_text_loader(self.text))
        assert text.startswith('[experiment]\nkappa = 0.04, 0.02, 0.01\n\n[solver]')

    def test_format_values(self):
        text = loader.serialize_ini({'a.b': True, 'a.c': [0.5, 0.25], 'a.d': 0.1})
        assert_equal(text, '[a]\nb = true\nc = 0.5, 0.25\nd = 0.1\n')

    def test_key_without_section(self):
        assert_raises(errors.ConfigurationError, loader.serialize_ini, {'n': 1})
