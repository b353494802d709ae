import contextlib
import io
import json
import tempfile
from pathlib import Path
from unittest import mock

from django.test import SimpleTestCase

from core import cli
from core.reports import VerificationReport


def finished_report(passed: bool) -> VerificationReport:
    report = VerificationReport('verify-kinematics', seed=1)
    report.add_check('conservation', 0.0, 0.0, 1e-12, passed)
    report.add_table('volume', ['r', 'estimate'], [(0.5, 1.0)])
    return report.finish()


class CommandLineTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = Path(self.tmp.name) / 'run.json'
        self.config.write_text(json.dumps({'monte_carlo': {'samples': 100}}))
        self.out = Path(self.tmp.name) / 'reports'

    def invoke(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = cli.run(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    @mock.patch('core.management.commands.verify.SuiteService.run')
    def test_passing_suite(self, run):
        run.return_value = finished_report(True)
        code, stdout, _ = self.invoke('verify-kinematics', '--config', str(self.config), '--out', str(self.out))
        self.assertEqual(code, cli.EXIT_PASSED)
        self.assertIn('all checks passed', stdout)
        self.assertTrue((self.out / 'verify-kinematics.json').exists())
        self.assertTrue((self.out / 'verify-kinematics__volume.csv').exists())
        suite, config = run.call_args[0]
        self.assertEqual(suite, 'verify-kinematics')
        self.assertEqual(config.mc.samples, 100)

    @mock.patch('core.management.commands.verify.SuiteService.run')
    def test_failing_suite(self, run):
        run.return_value = finished_report(False)
        code, _, stderr = self.invoke('--suite', 'verify-kinematics', '--config', str(self.config),
                                      '--out', str(self.out), '--no-csv')
        self.assertEqual(code, cli.EXIT_FAILED)
        self.assertIn('conservation', stderr)
        self.assertFalse((self.out / 'verify-kinematics__volume.csv').exists())
        report = json.loads((self.out / 'verify-kinematics.json').read_text())
        self.assertFalse(report['passed'])

    @mock.patch('core.management.commands.verify.SuiteService.run')
    def test_command_line_overrides(self, run):
        run.return_value = finished_report(True)
        self.invoke('verify-kinematics', '--config', str(self.config), '--out', str(self.out),
                    '--samples', '1e4', '--seed', '12', '--threads', '2')
        config = run.call_args[0][1]
        self.assertEqual((config.mc.samples, config.mc.seed, config.mc.threads), (10_000, 12, 2))

    def test_missing_config(self):
        code, _, stderr = self.invoke('verify-kinematics', '--config', '/nonexistent/resonant/run.json')
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertIn('not found', stderr)

    def test_invalid_config(self):
        self.config.write_text(json.dumps({'cross_section': {'delta2': 0.6}}))
        code, _, _ = self.invoke('verify-kinematics', '--config', str(self.config))
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_unknown_suite(self):
        code, _, _ = self.invoke('verify-everything', '--config', str(self.config))
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_bad_sample_count(self):
        code, _, _ = self.invoke('verify-kinematics', '--config', str(self.config), '--samples', 'many')
        self.assertEqual(code, cli.EXIT_USAGE)
        code, _, _ = self.invoke('verify-kinematics', '--config', str(self.config), '--samples', '2.5')
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_no_suite(self):
        code, _, _ = self.invoke('--config', str(self.config))
        self.assertEqual(code, cli.EXIT_USAGE)
