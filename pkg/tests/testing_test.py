from krl import config, errors, settings, testing  # noqa: F401

from testing.testifycompat import (
    assert_equal,
    assert_raises,
)


NAME = 'testing_test'


def get(key):
    return config.get_namespace(NAME).get(key)


class TestMockConfiguration:

    def test_init(self):
        with testing.MockConfiguration(a='one', b='two', namespace=NAME,
                                       validate=False):
            assert_equal(get('a'), 'one')
            assert_equal(get('b'), 'two')
        assert_equal(get('a'), None)

    def test_init_nested(self):
        conf = {
            'a': {
                'b': 'two',
            },
            'c': 'three'
        }
        with testing.MockConfiguration(conf, namespace=NAME, validate=False):
            assert_equal(get('a.b'), 'two')
            assert_equal(get('c'), 'three')

    def test_unknown_keys_rejected(self):
        mock_conf = testing.MockConfiguration({'grid': {'n_cellz': 3}})
        assert_raises(errors.ConfigurationError, mock_conf.__enter__)


class TestPatchConfiguration:

    def test_nested(self):
        with testing.MockConfiguration(a='one', b='two', namespace=NAME,
                                       validate=False):
            with testing.PatchConfiguration(a='three', namespace=NAME,
                                            validate=False):
                assert_equal(get('a'), 'three')
                assert_equal(get('b'), 'two')

            assert_equal(get('a'), 'one')
            assert_equal(get('b'), 'two')

    def test_not_nested(self):
        with testing.PatchConfiguration(a='one', b='two', namespace=NAME,
                                        validate=False):
            assert_equal(get('a'), 'one')
            assert_equal(get('b'), 'two')
