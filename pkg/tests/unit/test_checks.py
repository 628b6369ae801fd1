import numpy as np
import pytest

from lindblad_cptp.checks import Issue, check_environment, check_trajectory, min_eig_monitor
from lindblad_cptp.common.environment import select_env
from lindblad_cptp.exceptions import InvariantViolation
from lindblad_cptp.services.diagnostics import CPTPReport
from lindblad_cptp.services.simulation import Trajectory

pytestmark = [pytest.mark.unit]

CLEAN = CPTPReport(trace_defect=0.0, herm_defect=0.0, min_eig=0.0, rank_eps=1)


def trajectory(*reports: CPTPReport) -> Trajectory:
    return Trajectory(
        dt=0.1,
        observable=np.zeros(len(reports)),
        sample_steps=tuple(range(len(reports))),
        reports=reports,
        sample_ranks=(1,) * len(reports),
    )


class TestIssue:
    def test_levels(self):
        """Only errors count as errors."""
        assert Issue.error('bad', id='E1').is_error
        assert not Issue.warning('meh').is_error


class TestCheckEnvironment:
    def test_invalid_name(self, tmp_path):
        """An unknown environment name is E001."""
        issues = check_environment(select_env(tmp_path, 'staging'))
        assert [(i.id, i.is_error) for i in issues] == [('E001', True)]

    def test_ambiguous_files(self, tmp_path):
        """Two env files are E002."""
        (tmp_path / '.env.dev').touch()
        (tmp_path / '.env.ci').touch()
        assert [i.id for i in check_environment(select_env(tmp_path))] == ['E002']

    def test_clean(self, tmp_path):
        """A single env file raises nothing."""
        (tmp_path / '.env.dev').touch()
        assert check_environment(select_env(tmp_path)) == []


class TestCheckTrajectory:
    def test_clean_run(self):
        """A clean run has no issues."""
        assert check_trajectory(trajectory(CLEAN, CLEAN), cp_scheme=True, renormalized=True) == []

    def test_negative_eigenvalue_cp_scheme(self):
        """A CP scheme going negative is an error."""
        bad = CPTPReport(0.0, 0.0, -1e-6, 2)
        issues = check_trajectory(trajectory(CLEAN, bad), cp_scheme=True, renormalized=True)
        assert [(i.id, i.is_error) for i in issues] == [('E010', True)]

    def test_negative_eigenvalue_plain_rk(self):
        """Plain RK going negative is only a warning."""
        bad = CPTPReport(0.0, 0.0, -1e-6, 2)
        issues = check_trajectory(trajectory(bad), cp_scheme=False, renormalized=True)
        assert [(i.id, i.is_error) for i in issues] == [('W010', False)]

    def test_trace_defect_only_when_renormalized(self):
        """Trace drift is expected without renormalization."""
        drift = CPTPReport(1e-6, 0.0, 0.0, 1)
        issues = check_trajectory(trajectory(drift), cp_scheme=True, renormalized=True)
        assert [i.id for i in issues] == ['E011']
        assert check_trajectory(trajectory(drift), cp_scheme=True, renormalized=False) == []

    def test_hermiticity(self):
        """Hermiticity defects are errors."""
        skew = CPTPReport(0.0, 1e-6, 0.0, 1)
        issues = check_trajectory(trajectory(skew), cp_scheme=False, renormalized=False)
        assert [i.id for i in issues] == ['E012']


class TestMinEigMonitor:
    def test_passes_above_threshold(self):
        """Roundoff-level negatives are tolerated."""
        min_eig_monitor(1e-6)(3, 0.3, CPTPReport(0.0, 0.0, -1e-9, 1))

    def test_aborts_below_threshold(self):
        """A clearly negative eigenvalue aborts the run."""
        with pytest.raises(InvariantViolation, match='step 3'):
            min_eig_monitor(1e-6)(3, 0.3, CPTPReport(0.0, 0.0, -1e-3, 1))
