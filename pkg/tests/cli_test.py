import os

import numpy as np
import pytest

from krl import cli
from krl import diagnostics
from krl import errors
from krl import harness
from krl import modulation
from krl import settings
from testing.testifycompat import (
    assert_equal,
    assert_in,
    mock,
)


@pytest.fixture(autouse=True)
def defaults():
    yield
    settings.load_configuration()


def run_cli(tmp_path, *argv):
    return cli.main(list(argv) + ['--out', str(tmp_path)])


class TestErrorCategory:

    @pytest.mark.parametrize('error,expected', [
        (errors.ConfigurationError('x'), ('config', 2)),
        (errors.ValidationError('x'), ('config', 2)),
        (errors.RiemannError('x'), ('numerical', 3)),
        (errors.ProfileError('x'), ('numerical', 3)),
        (errors.SolverError('x'), ('solver', 4)),
        (errors.SeparationError('x'), ('solver', 4)),
        (errors.DiagnosticError('x'), ('diagnostics', 5)),
        (KeyError('x'), ('other', 1)),
    ])
    def test_mapping(self, error, expected):
        assert_equal(cli.error_category(error), expected)


class TestMain:

    def test_no_command(self, capsys):
        assert_equal(cli.main([]), 1)
        assert_in('usage', capsys.readouterr().err)

    def test_help_config(self, capsys):
        assert_equal(cli.main(['--help-config']), 0)
        assert_in('experiment.kappa', capsys.readouterr().out)

    def test_riemann(self, tmp_path, capsys):
        code = run_cli(tmp_path, 'riemann', '--set', 'pattern.minus=1,0,1',
                       '--set', 'pattern.plus=1,0,1')
        assert_equal(code, 0)
        with open(str(tmp_path / 'riemann.txt')) as fh:
            assert_equal(fh.read(), capsys.readouterr().out)

    def test_unknown_key(self, tmp_path, capsys):
        code = run_cli(tmp_path, 'riemann', '--set', 'pattern.colour=red')
        assert_equal(code, 2)
        err = capsys.readouterr().err
        assert err.startswith('error[config]: ')
        assert_in('pattern.colour', err)

    def test_missing_config_file(self, tmp_path, capsys):
        code = run_cli(tmp_path, 'riemann', '--config', str(tmp_path / 'none.ini'))
        assert_equal(code, 2)
        assert_in('No such configuration file', capsys.readouterr().err)

    def test_command_error_exit_code(self, tmp_path, capsys):
        with mock.patch.dict(cli.COMMANDS, {
            'simulate': mock.Mock(side_effect=errors.SolverError("CFL violated")),
        }):
            code = run_cli(tmp_path, 'simulate')
        assert_equal(code, 4)
        assert_equal(capsys.readouterr().err, 'error[solver]: CFL violated\n')

    def test_flag_overrides(self, tmp_path):
        with mock.patch.dict(cli.COMMANDS, {'sweep': mock.Mock(return_value=0)}):
            code = run_cli(tmp_path, 'sweep', '--kappa', '0.1,0.05,0.01',
                           '--pattern', 'scs', '--mode', 'sharp')
        assert_equal(code, 0)
        assert_equal(settings.experiment_config.kappa, [0.1, 0.05, 0.01])
        assert_equal(settings.pattern_config.kind, 'scs')
        assert_equal(settings.experiment_config.mode, 'sharp')
        assert_equal(settings.experiment_config.out, str(tmp_path))


class TestProfile:

    def test_profile_table(self, tmp_path, capsys):
        code = run_cli(tmp_path, 'profile', '--family', '3', '--delta', '0.05',
                       '--set', 'experiment.profile_nodes=2000')
        assert_equal(code, 0)
        header, rows = harness.read_csv(str(tmp_path / 'profile-3.csv'))
        assert_equal(tuple(header), cli.PROFILE_COLUMNS)
        assert_equal(rows.shape[1], len(cli.PROFILE_COLUMNS))
        assert np.all(np.diff(rows[:, 0]) > 0)
        assert_in('monotone = true', capsys.readouterr().out)


class TestDiagnose:

    def write_run(self, run_dir, ledger_value=0.0):
        times = np.linspace(0.0, 1.0, 5)
        rows = [(t, 0.0, 0.0, 0.1 * t, 0.1, 0.1 * t, 0.1 * t, 1.0) for t in times]
        harness.write_csv(os.path.join(run_dir, 'shifts.csv'),
                          modulation.SHIFT_COLUMNS, rows)
        ledger = []
        for t in times:
            row = {name: 0.0 for name in diagnostics.DIAGNOSTIC_COLUMNS}
            row['t'] = t
            row['G1'] = ledger_value
            ledger.append([row[name] for name in diagnostics.DIAGNOSTIC_COLUMNS])
        harness.write_csv(os.path.join(run_dir, 'diagnostics.csv'),
                          diagnostics.DIAGNOSTIC_COLUMNS, ledger)

    def test_no_run_dirs(self, tmp_path, capsys):
        assert_equal(run_cli(tmp_path, 'diagnose'), 5)
        assert_in('No run directories', capsys.readouterr().err)

    def test_checks_pass(self, tmp_path, capsys):
        self.write_run(str(tmp_path / 'kappa-0.01'))
        assert_equal(run_cli(tmp_path, 'diagnose'), 0)
        assert_equal(capsys.readouterr().out, 'all checks passed\n')
        assert os.path.exists(str(tmp_path / 'diagnose.txt'))

    def test_negative_column(self, tmp_path):
        run_dir = str(tmp_path / 'kappa-0.01')
        self.write_run(run_dir, ledger_value=-1.0)
        problems = cli.check_run_dir(run_dir)
        assert_equal(len(problems), 1)
        assert_in('G1 is negative at t=0.0', problems[0])
        assert_equal(run_cli(tmp_path, 'diagnose'), 5)
