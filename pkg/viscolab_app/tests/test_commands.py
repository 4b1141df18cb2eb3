import json
import math
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from celery_app.celery import app as celery_app
from viscolab_app.models import SimulationRun
from viscolab_app.services.scenarios import scenario_path


def call(*args, **options):
    out = StringIO()
    call_command(*args, stdout=out, **options)
    return out.getvalue()


def key_values(output):
    values = {}
    for line in output.splitlines():
        if "=" in line and not line.startswith("term"):
            key, value = line.split("=", 1)
            values[key] = value
    return values


class TemporaryDirectoryMixin:
    def setUp(self):
        super().setUp()
        self.workspace = tempfile.TemporaryDirectory()
        self.addCleanup(self.workspace.cleanup)
        self.directory = Path(self.workspace.name)


class DeriveKernelCommandTests(TemporaryDirectoryMixin, SimpleTestCase):
    def test_maxwell(self):
        output = call("derive_kernel", "maxwell", "2", "1")
        values = key_values(output)
        self.assertEqual(float(values["instantaneous"]), 2.0)
        self.assertIn("term amplitude=4.0 rate=2.0", output)

    def test_burgers_unit_constants(self):
        values = key_values(call("derive_kernel", "burgers", "1", "1", "1", "1"))
        self.assertAlmostEqual(float(values["r1"]), (3.0 + math.sqrt(5.0)) / 2.0, delta=1e-12)
        self.assertAlmostEqual(float(values["r2"]), (3.0 - math.sqrt(5.0)) / 2.0, delta=1e-12)
        self.assertAlmostEqual(float(values["b1"]), 0.7236, delta=1e-4)
        self.assertAlmostEqual(float(values["b2"]), 0.2764, delta=1e-4)

    def test_kernel_csv(self):
        path = self.directory / "kernel.csv"
        call("derive_kernel", "sls", "1", "2", "1", output=str(path))
        self.assertEqual(path.read_text(encoding="utf-8").splitlines(), ["amplitude,rate", "4.0,2.0"])

    def test_wrong_parameter_count(self):
        with self.assertRaises(CommandError) as context:
            call("derive_kernel", "sls", "1", "2")
        self.assertEqual(context.exception.returncode, 2)

    def test_non_positive_constant(self):
        with self.assertRaises(CommandError) as context:
            call("derive_kernel", "maxwell", "0", "1")
        self.assertEqual(context.exception.returncode, 2)


class ValidateKernelCommandTests(TemporaryDirectoryMixin, SimpleTestCase):
    def test_bundled_scenario_by_name(self):
        report = json.loads(call("validate_kernel", "sls_unit"))
        self.assertEqual(report["scenario"], "sls_unit")

    def test_certified_scenario(self):
        report = json.loads(call("validate_kernel", str(scenario_path("maxwell_spring"))))
        self.assertEqual(report["scenario"], "maxwell_spring")
        self.assertTrue(report["satisfied"])
        self.assertEqual(report["kappa4_tilde"], 2.0)

    def test_fluid_scenario_fails_certification(self):
        path = self.directory / "fluid.json"
        path.write_text(json.dumps({
            "schema": 1,
            "name": "fluid",
            "mesh": {"cells": 10},
            "material": {"spring_dashpot": {"variant": "maxwell", "cs": 2.0, "eta": 1.0}},
            "sim": {"t_end": 1.0},
        }), encoding="utf-8")
        with self.assertRaises(CommandError) as context:
            call("validate_kernel", str(path))
        self.assertEqual(context.exception.returncode, 1)

    def test_missing_config(self):
        with self.assertRaises(CommandError) as context:
            call("validate_kernel", str(self.directory / "absent.json"))
        self.assertEqual(context.exception.returncode, 2)


class FitDecayCommandTests(TemporaryDirectoryMixin, SimpleTestCase):
    def setUp(self):
        super().setUp()
        self.trace = self.directory / "trace.csv"
        rows = ["t,E"] + [f"{t!r},{5.0 * math.exp(-0.7 * t)!r}" for t in (0.5 * n for n in range(21))]
        self.trace.write_text("\n".join(rows) + "\n", encoding="utf-8")

    def test_exponential_summary(self):
        lines = call("fit_decay", str(self.trace), "E", "exp", "--header").splitlines()
        self.assertEqual(lines[0], "column,model,value,intercept,r_squared,t_lo,t_hi,points,trimmed")
        fields = lines[1].split(",")
        self.assertEqual(fields[:2], ["E", "exponential"])
        self.assertAlmostEqual(float(fields[2]), 0.7, delta=1e-6)
        self.assertEqual((float(fields[5]), float(fields[6])), (5.0, 10.0))
        self.assertEqual(fields[7:], ["11", "0"])

    def test_window(self):
        line = call("fit_decay", str(self.trace), "E", "exponential", "--window", "1", "2")
        self.assertEqual(line.strip().split(",")[7], "3")

    def test_missing_column(self):
        with self.assertRaises(CommandError) as context:
            call("fit_decay", str(self.trace), "L", "power")
        self.assertEqual(context.exception.returncode, 2)


class CheckLemmaCommandTests(SimpleTestCase):
    def test_unit_parameters_pass(self):
        lines = call("check_lemma", "1", "1", "1", "3").splitlines()
        self.assertEqual(lines[-1], "PASS")
        self.assertTrue(lines[1].startswith("margin="))

    def test_step_above_limit(self):
        with self.assertRaises(CommandError) as context:
            call("check_lemma", "1", "1", "1", "3", "--dt", "0.1")
        self.assertEqual(context.exception.returncode, 2)


class SimulateCommandTests(TemporaryDirectoryMixin, TestCase):
    def write_config(self):
        path = self.directory / "tiny.json"
        path.write_text(json.dumps({
            "schema": 1,
            "name": "tiny",
            "mesh": {"cells": 8},
            "material": {"modulus": 1.0, "kernel": {"family": "prony", "terms": [[0.5, 1.0]]}},
            "sim": {"t_end": 0.5},
            "initial": {"displacement": {"profile": "mode"}},
            "outputs": {"trace": "tiny.csv"},
        }), encoding="utf-8")
        return path

    def test_simulate_records_run(self):
        output = call("simulate", str(self.write_config()), fit="exp", output_dir=str(self.directory))
        self.assertIn("scenario=tiny", output)
        self.assertIn("rate=", output)
        self.assertTrue((self.directory / "tiny.csv").exists())
        self.assertEqual(SimulationRun.objects.get().fit_model, "exponential")

    def test_no_record(self):
        call("simulate", str(self.write_config()), no_record=True, output_dir=str(self.directory))
        self.assertFalse(SimulationRun.objects.exists())

    def test_missing_config(self):
        with self.assertRaises(CommandError) as context:
            call("simulate", str(self.directory / "absent.json"))
        self.assertEqual(context.exception.returncode, 2)

    def test_run_scenarios_rejects_unknown_names(self):
        with self.assertRaises(CommandError) as context:
            call("run_scenarios", "no_such_scenario")
        self.assertEqual(context.exception.returncode, 2)

    def test_run_scenarios_enqueues(self):
        previous = celery_app.conf.task_always_eager
        celery_app.conf.task_always_eager = True
        self.addCleanup(setattr, celery_app.conf, "task_always_eager", previous)
        path = self.write_config()
        with self.settings(VIDLAB_OUTPUT_DIR=self.workspace.name):
            output = call("run_scenarios", str(path))
        self.assertTrue(output.startswith("tiny: "))
        self.assertEqual(SimulationRun.objects.count(), 1)
