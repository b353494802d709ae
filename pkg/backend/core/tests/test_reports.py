import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.reports import VerificationReport, bounded_profile


def admissibility_child() -> VerificationReport:
    child = VerificationReport('energy-law-admissibility')
    child.add_table('low_upper', ['grid', 'ratio'], [(0.1, 1.0)])
    return child


class ReportWriteTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def test_shared_child_tables_do_not_collide(self):
        root = VerificationReport('all')
        for suite in ('verify-cross-section', 'verify-bounds'):
            parent = VerificationReport(suite)
            parent.add_child(admissibility_child())
            root.add_child(parent)
        written = root.write(self.out)
        names = sorted(p.name for p in written if p.suffix == '.csv')
        self.assertEqual(names, [
            'all.verify-bounds.energy-law-admissibility__low_upper.csv',
            'all.verify-cross-section.energy-law-admissibility__low_upper.csv',
        ])

    def test_repeated_path_gets_suffix(self):
        root = VerificationReport('verify-bounds')
        root.add_child(admissibility_child())
        root.add_child(admissibility_child())
        written = root.write(self.out)
        names = sorted(p.name for p in written if p.suffix == '.csv')
        self.assertEqual(names, [
            'verify-bounds.energy-law-admissibility-2__low_upper.csv',
            'verify-bounds.energy-law-admissibility__low_upper.csv',
        ])

    def test_no_csv(self):
        root = VerificationReport('verify-bounds')
        root.add_child(admissibility_child())
        self.assertEqual([p.name for p in root.write(self.out, write_csv=False)], ['verify-bounds.json'])


class BoundedProfileTests(SimpleTestCase):

    def test_flat_profile_passes(self):
        grid = np.logspace(0, 3, 31)
        self.assertTrue(bounded_profile(grid, np.ones_like(grid)).passed)

    def test_growing_profile_fails(self):
        grid = np.logspace(0, 3, 31)
        self.assertFalse(bounded_profile(grid, grid).passed)
