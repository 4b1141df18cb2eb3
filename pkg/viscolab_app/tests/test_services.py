import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, TestCase, override_settings

from celery_app.celery import app as celery_app
from viscolab_app.models import RunCheck, RunStatus, SimulationRun
from viscolab_app.services.exceptions import (
    CertificationError,
    CflViolationError,
    ConfigurationError,
    InstabilityError,
    StiffnessError,
    UnsupportedRegimeError,
)
from viscolab_app.services.services import EXIT_CODES, LaboratoryService, status_for


def write_scenario(directory, name="small_sls", **sim):
    document = {
        "schema": 1,
        "name": name,
        "mesh": {"cells": 10},
        "material": {"spring_dashpot": {"variant": "sls", "c1": 1.0, "c2": 1.0, "eta2": 1.0}},
        "sim": {"t_end": 0.5, "stride": 2, **sim},
        "initial": {"displacement": {"profile": "mode"}},
        "outputs": {"trace": f"traces/{name}.csv"},
    }
    path = Path(directory) / f"{name}.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


class StatusMappingTests(SimpleTestCase):
    def test_statuses(self):
        self.assertEqual(status_for(CertificationError("x")), RunStatus.CERTIFICATION_FAILED)
        self.assertEqual(status_for(ConfigurationError("x")), RunStatus.CONFIG_ERROR)
        self.assertEqual(status_for(CflViolationError("x", suggested_dt=0.1)), RunStatus.CONFIG_ERROR)
        self.assertEqual(status_for(UnsupportedRegimeError("x")), RunStatus.CONFIG_ERROR)
        self.assertEqual(status_for(InstabilityError("x", step=3)), RunStatus.NUMERICAL_ERROR)
        self.assertEqual(status_for(StiffnessError("x")), RunStatus.NUMERICAL_ERROR)

    def test_exit_codes(self):
        self.assertEqual(EXIT_CODES[RunStatus.SUCCESS], 0)
        self.assertEqual(EXIT_CODES[RunStatus.CERTIFICATION_FAILED], 1)
        self.assertEqual(EXIT_CODES[RunStatus.CONFIG_ERROR], 2)
        self.assertEqual(EXIT_CODES[RunStatus.NUMERICAL_ERROR], 3)


class LaboratoryServiceTests(TestCase):
    def setUp(self):
        self.workspace = tempfile.TemporaryDirectory()
        self.addCleanup(self.workspace.cleanup)
        self.directory = Path(self.workspace.name)

    def test_successful_run_is_recorded(self):
        path = write_scenario(self.directory)
        result = LaboratoryService.simulate(path, fit="exponential", output_dir=self.directory)

        self.assertTrue(result.ok)
        self.assertEqual(result.exit_code, 0)
        self.assertIn("scenario=small_sls", result.message)

        run = SimulationRun.objects.get()
        self.assertEqual(run.status, RunStatus.SUCCESS)
        self.assertEqual(run.scenario, "small_sls")
        self.assertEqual(run.config_hash, result.outcome.config.config_hash)
        self.assertEqual(run.sample_count, len(result.outcome.trace))
        self.assertEqual(run.final_energy, result.outcome.final_energy)
        self.assertEqual(run.fit_model, "exponential")
        self.assertIsNotNone(run.finished_at)
        self.assertTrue(Path(run.trace_path).exists())

        names = set(run.checks.values_list("name", flat=True))
        self.assertEqual(names, {"kernel_certification", "energy_dissipation", "boundedness_ratio", "decay_fit",
                                 "exponential_comparison"})
        self.assertTrue(run.checks.get(name="kernel_certification").passed)

    def test_missing_config_is_a_config_error(self):
        result = LaboratoryService.simulate(self.directory / "absent.json")
        self.assertEqual(result.status, RunStatus.CONFIG_ERROR)
        self.assertEqual(result.exit_code, 2)
        self.assertIn("absent.json", result.message)
        run = SimulationRun.objects.get()
        self.assertEqual(run.status, RunStatus.CONFIG_ERROR)
        self.assertEqual(run.error_message, result.message)

    def test_cfl_violation_is_a_config_error(self):
        path = write_scenario(self.directory, dt=0.5)
        result = LaboratoryService.simulate(path, record=False, output_dir=self.directory)
        self.assertEqual(result.exit_code, 2)
        self.assertIsNone(result.run)
        self.assertFalse(SimulationRun.objects.exists())

    def test_rerun_replaces_checks(self):
        path = write_scenario(self.directory)
        first = LaboratoryService.simulate(path, output_dir=self.directory)
        again = LaboratoryService.simulate(path, output_dir=self.directory, run=first.run)
        self.assertEqual(again.run.id, first.run.id)
        self.assertEqual(SimulationRun.objects.count(), 1)
        self.assertEqual(RunCheck.objects.filter(run=first.run, name="energy_dissipation").count(), 1)

    def test_certify(self):
        path = write_scenario(self.directory)
        config, report = LaboratoryService.certify(path)
        self.assertEqual(config.name, "small_sls")
        self.assertTrue(report.satisfied)

    def test_enqueue_runs_eagerly_without_broker(self):
        previous = celery_app.conf.task_always_eager
        celery_app.conf.task_always_eager = True
        self.addCleanup(setattr, celery_app.conf, "task_always_eager", previous)
        path = write_scenario(self.directory)
        with override_settings(VIDLAB_OUTPUT_DIR=self.workspace.name):
            task_ids = LaboratoryService.enqueue([path])
        self.assertEqual(len(task_ids), 1)
        self.assertEqual(SimulationRun.objects.get().status, RunStatus.SUCCESS)
