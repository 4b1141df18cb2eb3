import math

import numpy as np
from django.test import SimpleTestCase

from viscolab_app.services.energy import check_dissipation
from viscolab_app.services.exceptions import CflViolationError, ConfigurationError, ValidationError
from viscolab_app.services.kernels import PronyKernel, derive_sls
from viscolab_app.services.solver import (
    InitialData,
    MaterialField1D,
    Mesh1D,
    SimConfig,
    Simulation,
    displacement_history,
    mode_profile,
    run,
    stable_time_step,
)


def maxwell_material(mesh):
    kernel = PronyKernel.from_scalars([(4.0, 2.0)])
    return MaterialField1D.uniform(mesh, modulus=3.0, kernel=kernel)


def mode_data(mesh, amplitude=1.0):
    return InitialData(amplitude * mode_profile(mesh), np.zeros(mesh.cells + 1))


class MeshAndConfigTests(SimpleTestCase):
    def test_mesh_geometry(self):
        mesh = Mesh1D(2.0, 8)
        self.assertEqual(mesh.h, 0.25)
        self.assertEqual(mesh.nodes.shape, (9,))
        self.assertEqual(mesh.nodes[-1], 2.0)
        np.testing.assert_allclose(mesh.midpoints[:2], [0.125, 0.375])

    def test_mesh_validation(self):
        with self.assertRaises(ValidationError):
            Mesh1D(1.0, 3)
        with self.assertRaises(ValidationError):
            Mesh1D(-1.0, 10)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            SimConfig(t_end=1.0, cfl=0.95)
        with self.assertRaises(ConfigurationError):
            SimConfig(t_end=1.0, backend="fft")
        with self.assertRaises(ConfigurationError):
            SimConfig(t_end=-1.0)
        with self.assertRaises(ConfigurationError):
            SimConfig(t_end=1.0, s=-0.5)

    def test_material_validation(self):
        mesh = Mesh1D(1.0, 4)
        with self.assertRaises(ValidationError):
            MaterialField1D.uniform(mesh, modulus=0.0)
        with self.assertRaises(ValidationError):
            MaterialField1D.uniform(mesh, modulus=1.0, rho=0.0)

    def test_stable_time_step(self):
        mesh = Mesh1D(1.0, 100)
        material = MaterialField1D.uniform(mesh, modulus=4.0)
        self.assertAlmostEqual(stable_time_step(mesh, material), 0.9 * 0.01 / 2.0, places=15)

    def test_time_step_above_limit_is_rejected(self):
        mesh = Mesh1D(1.0, 100)
        material = MaterialField1D.uniform(mesh, modulus=1.0)
        with self.assertRaises(CflViolationError) as context:
            Simulation(mesh, material, SimConfig(t_end=1.0, dt=0.02), mode_data(mesh))
        self.assertAlmostEqual(context.exception.suggested_dt, 0.009, places=12)

    def test_time_step_is_adjusted_to_reach_horizon(self):
        mesh = Mesh1D(1.0, 10)
        simulation = Simulation(mesh, MaterialField1D.uniform(mesh, 1.0), SimConfig(t_end=1.0, dt=0.03),
                                mode_data(mesh))
        self.assertEqual(simulation.n_steps, 34)
        self.assertAlmostEqual(simulation.dt * simulation.n_steps, 1.0, places=14)

    def test_initial_data_must_vanish_at_clamped_end(self):
        mesh = Mesh1D(1.0, 10)
        initial = InitialData(np.ones(11), np.zeros(11))
        with self.assertRaises(ValidationError):
            Simulation(mesh, MaterialField1D.uniform(mesh, 1.0), SimConfig(t_end=1.0), initial)

    def test_probe_outside_mesh(self):
        mesh = Mesh1D(1.0, 10)
        with self.assertRaises(ConfigurationError):
            Simulation(mesh, MaterialField1D.uniform(mesh, 1.0), SimConfig(t_end=1.0, probes=(11,)),
                       mode_data(mesh))


class ElasticLimitTests(SimpleTestCase):
    def test_staggered_energy_is_conserved(self):
        mesh = Mesh1D(1.0, 50)
        material = MaterialField1D.uniform(mesh, modulus=1.0)
        result = run(mesh, material, SimConfig(t_end=3.0, stride=5), mode_data(mesh), calibrate=False)
        energy = result.trace.column("E")
        self.assertLess(np.max(np.abs(energy - energy[0])) / energy[0], 1e-10)

    def test_standing_wave_converges_at_second_order(self):
        errors = []
        for cells in (20, 40, 80):
            mesh = Mesh1D(1.0, cells)
            material = MaterialField1D.uniform(mesh, modulus=1.0)
            result = run(mesh, material, SimConfig(t_end=1.0, cfl=0.5, stride=1000), mode_data(mesh),
                         calibrate=False)
            exact = mode_profile(mesh) * math.cos(0.5 * math.pi * 1.0)
            errors.append(float(np.max(np.abs(result.displacement - exact))))
        orders = [math.log2(coarse / fine) for coarse, fine in zip(errors, errors[1:])]
        for order in orders:
            self.assertGreaterEqual(order, 1.9)

    def test_boundary_damping_dissipates_energy(self):
        mesh = Mesh1D(1.0, 40)
        material = MaterialField1D.uniform(mesh, modulus=1.0)
        result = run(mesh, material, SimConfig(t_end=4.0, s=1.0), mode_data(mesh), calibrate=False)
        self.assertTrue(check_dissipation(result.trace).passed)
        energy = result.trace.column("E")
        self.assertLess(energy[-1], 0.5 * energy[0])

    def test_zero_horizon_gives_single_sample(self):
        mesh = Mesh1D(1.0, 10)
        result = run(mesh, MaterialField1D.uniform(mesh, 1.0), SimConfig(t_end=0.0), mode_data(mesh),
                     calibrate=False)
        self.assertEqual(len(result.trace), 1)
        self.assertEqual(result.n_steps, 0)


class ViscoelasticRunTests(SimpleTestCase):
    def test_backends_agree(self):
        mesh = Mesh1D(1.0, 20)
        material = maxwell_material(mesh)
        histories = {}
        for backend in ("dense", "prony"):
            config = SimConfig(t_end=2.0, backend=backend)
            _, histories[backend] = displacement_history(mesh, material, config, mode_data(mesh))
        scale = np.max(np.abs(histories["dense"]))
        self.assertLess(np.max(np.abs(histories["dense"] - histories["prony"])) / scale, 1e-6)

    def test_energy_decays_for_sls(self):
        mesh = Mesh1D(1.0, 20)
        model = derive_sls(1.0, 1.0, 1.0)
        material = MaterialField1D.uniform(mesh, modulus=model.instantaneous.value(), kernel=model.kernel)
        result = run(mesh, material, SimConfig(t_end=3.0, stride=10), mode_data(mesh), calibrate=False)
        energy = result.trace.column("E")
        self.assertLess(energy[-1], energy[0])
        self.assertTrue(np.all(np.isfinite(result.trace.column("L"))))

    def test_linear_and_quadratic_scaling(self):
        mesh = Mesh1D(1.0, 16)
        material = maxwell_material(mesh)
        config = SimConfig(t_end=1.0, stride=5, probes=(16,))
        base = run(mesh, material, config, mode_data(mesh), calibrate=False)
        scaled = run(mesh, material, config, mode_data(mesh, 3.0), calibrate=False)

        np.testing.assert_allclose(scaled.displacement, 3.0 * base.displacement, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(scaled.trace.probe_column(0), 3.0 * base.trace.probe_column(0), rtol=1e-12)
        for column in ("E", "E_dot", "boxG_u", "kinetic", "elastic", "R"):
            np.testing.assert_allclose(scaled.trace.column(column), 9.0 * base.trace.column(column), rtol=1e-12,
                                       atol=1e-15, err_msg=column)

    def test_non_unit_density_is_flagged(self):
        mesh = Mesh1D(1.0, 10)
        material = MaterialField1D.uniform(mesh, modulus=2.0, rho=2.0)
        with self.assertLogs("viscolab_app.services.energy", level="WARNING"):
            result = run(mesh, material, SimConfig(t_end=0.5), mode_data(mesh), calibrate=False)
        self.assertIn("density_not_unit", result.trace.samples[0].flags)

    def test_snapshots_and_metadata(self):
        mesh = Mesh1D(1.0, 10)
        simulation = Simulation(mesh, maxwell_material(mesh), SimConfig(t_end=1.0, snapshot_stride=4),
                                mode_data(mesh))
        result = simulation.run(calibrate=False)
        self.assertEqual(result.snapshots[0][0], 0.0)
        self.assertAlmostEqual(result.snapshots[-1][0], 1.0, places=12)
        self.assertEqual(result.trace.metadata["backend"], "prony")
        self.assertEqual(result.trace.metadata["n_steps"], simulation.n_steps)
        self.assertAlmostEqual(result.trace.times[-1], 1.0, places=12)
