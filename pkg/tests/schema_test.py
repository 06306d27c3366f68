import pytest

from testing.testifycompat import (
    assert_equal,
    assert_raises,
    assert_raises_and_contains,
    mock,
)
from krl import testing, schema, validation, config, errors


class TestCreateValueType:

    def test_build_value_type(self):
        help_text = 'what?'
        config_key = 'one'
        float_type = schema.build_value_type(validation.validate_float)
        assert callable(float_type)
        value_def = float_type(default=5, config_key=config_key, help=help_text)
        assert_equal(value_def.default, 5)
        assert_equal(value_def.help, help_text)
        assert_equal(value_def.config_key, config_key)


class ATestingSchema(schema.Schema):

    namespace = 'my_testing_namespace'

    config_path = 'my.thing'

    one = schema.int(default=5)
    two = schema.string(help='the value for two')
    some_value = schema.any(config_key='three.four')
    really = schema.bool(default=False)
    ratio = schema.positive(default=0.5)
    kappas = schema.kappa_list(default=(0.02, 0.01))
    mode = schema.mode(default='sharp')
    options = schema.list_of_float(default=())


@pytest.fixture
def meta_schema():
    with mock.patch('krl.schema.config', autospec=True) as mock_config:
        schema_object = ATestingSchema()
        yield schema_object.__class__, mock_config


class TestSchemaMeta:

    def test_get_namespace_missing(self, meta_schema):
        meta, _ = meta_schema
        assert_raises(errors.ConfigurationError, meta.get_namespace, {})

    def test_get_namespace_present(self, meta_schema):
        meta, mock_config = meta_schema
        name = 'the_namespace'
        namespace = meta.get_namespace({'namespace': name})
        mock_config.get_namespace.assert_called_with(name)
        assert_equal(namespace, mock_config.get_namespace.return_value)

    def test_build_attributes(self, meta_schema):
        meta, mock_config = meta_schema
        value_def = schema.ValueTypeDefinition(
            validation.validate_int, None, 3, 'help')
        attributes = {
            'not_a_token': None,
            'a_token': value_def
        }
        namespace = mock.create_autospec(config.ConfigNamespace)
        attributes = meta.build_attributes(attributes, namespace)
        assert_equal(attributes['not_a_token'], None)
        assert_equal(list(attributes['_tokens'].keys()), ['a_token'])
        token = attributes['_tokens']['a_token']
        assert_equal(token.config_key, 'a_token')
        assert_equal(token.default, 3)
        assert isinstance(attributes['a_token'], property)
        namespace.register_token.assert_called_with(token)
        mock_config.config_help.add.assert_called_with(
            'a_token', validation.validate_int, 3, namespace.get_name.return_value,
            'help')


@pytest.fixture
def testing_schema_namespace():
    conf = {
        'my.thing.one': '1',
        'my.thing.two': 'another',
        'my.thing.three.four': 'deeper',
        'my.thing.kappas': '0.04, 0.02, 0.01',
        'my.thing.options': '1.5, 2',
    }
    with testing.MockConfiguration(conf, namespace=ATestingSchema.namespace):
        yield


class TestSchemaAcceptance:

    def test_schema(self, testing_schema_namespace):
        config_schema = ATestingSchema()
        assert_equal(config_schema.some_value, 'deeper')
        assert_equal(config_schema.one, 1)
        assert_equal(config_schema.two, 'another')
        assert_equal(config_schema.kappas, [0.04, 0.02, 0.01])
        assert_equal(config_schema.options, [1.5, 2.0])

    def test_defaults(self, testing_schema_namespace):
        config_schema = ATestingSchema()
        assert_equal(config_schema.really, False)
        assert_equal(config_schema.ratio, 0.5)
        assert_equal(config_schema.mode, 'sharp')

    def test_as_dict(self, testing_schema_namespace):
        values = ATestingSchema().as_dict()
        assert_equal(values['one'], 1)
        assert_equal(values['kappas'], [0.04, 0.02, 0.01])

    def test_invalid_value(self):
        conf = {'my.thing.two': 'x', 'my.thing.ratio': '-1'}
        with testing.MockConfiguration(conf, namespace=ATestingSchema.namespace):
            assert_raises_and_contains(
                errors.ConfigurationError, ['my.thing.ratio', 'positive'],
                getattr, ATestingSchema(), 'ratio')

    def test_missing_value(self):
        with testing.MockConfiguration({}, namespace=ATestingSchema.namespace):
            assert_raises_and_contains(
                errors.ConfigurationError, 'missing value for: my.thing.two',
                getattr, ATestingSchema(), 'two')
