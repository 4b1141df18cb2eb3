import numpy as np
from django.test import SimpleTestCase, tag

from viscolab_app.services.energy import check_energy_rate
from viscolab_app.services.scenarios import (
    InitialSection,
    ProfileSection,
    build_initial,
    build_simulation,
    identity_convergence,
    load_config,
    run_scenario,
    scenario_path,
)
from viscolab_app.services.solver import displacement_history


def bundled(name):
    return load_config(scenario_path(name))


@tag("acceptance")
class AcceptanceTests(SimpleTestCase):
    """Длительные сценарии встроенной библиотеки; запуск: manage.py test --tag acceptance."""

    def test_boundary_dissipation_rate(self):
        outcome = run_scenario(bundled("boundary_dissipation_only"), write=False)
        self.assertTrue(outcome.dissipation.passed)
        self.assertLessEqual(check_energy_rate(outcome.trace).relative_residual, 1e-3)

    def test_certified_scenarios_dissipate_and_stay_bounded(self):
        for name in ("maxwell_spring", "sls_unit", "burgers_unit_plus_spring", "poly_p3", "boundary_dissipation_only"):
            outcome = run_scenario(bundled(name), write=False)
            self.assertTrue(outcome.assumptions.satisfied, msg=name)
            self.assertTrue(outcome.dissipation.passed, msg=f"{name}: {outcome.dissipation}")
            self.assertLessEqual(outcome.boundedness, 10.0, msg=name)

    def test_elastic_limit_conserves_energy(self):
        outcome = run_scenario(bundled("elastic_limit"), write=False)
        energy = outcome.trace.column("E")
        self.assertLess(np.max(np.abs(energy - energy[0])) / energy[0], 1e-10)

    def test_exponential_decay_rate_does_not_depend_on_initial_data(self):
        config = bundled("maxwell_spring")
        outcome = run_scenario(config, write=False)
        self.assertTrue(outcome.assumptions.satisfied)
        self.assertTrue(outcome.dissipation.passed)
        self.assertGreater(outcome.fit.rate, 0.0)
        self.assertGreaterEqual(outcome.fit.r_squared, 0.99)

        profiles = (ProfileSection(profile="cubic"), ProfileSection(profile="sine_squared"),
                    ProfileSection(profile="mode", k=2))
        for profile in profiles:
            variant = config.model_copy(update={"initial": InitialSection(displacement=profile)})
            rate = run_scenario(variant, write=False).fit.rate
            self.assertLess(abs(rate - outcome.fit.rate) / outcome.fit.rate, 0.1, msg=profile.profile)

    def test_exponential_comparison(self):
        outcome = run_scenario(bundled("maxwell_spring"), write=False)
        comparison = outcome.exp_comparison
        self.assertTrue(comparison.passed, msg=comparison.message)
        self.assertGreater(comparison.b3, 0.0)

    def test_polynomial_decay(self):
        outcome = run_scenario(bundled("poly_p3"), write=False)
        self.assertTrue(outcome.assumptions.satisfied)
        self.assertEqual(outcome.fit.model, "power")
        self.assertLessEqual(outcome.fit.exponent, -0.9)

    def test_burgers_with_spring_decays(self):
        outcome = run_scenario(bundled("burgers_unit_plus_spring"), write=False)
        self.assertTrue(outcome.assumptions.satisfied)
        self.assertGreater(outcome.fit.rate, 0.0)

    def test_memory_backends_agree(self):
        config = bundled("maxwell_spring")
        simulation, _ = build_simulation(config)
        short = config.sim.model_copy(update={"t_end": 1000 * simulation.dt, "dt": simulation.dt})
        histories = {}
        for backend in ("dense", "prony"):
            variant = config.model_copy(update={"sim": short.model_copy(update={"backend": backend})})
            built, _ = build_simulation(variant)
            _, histories[backend] = displacement_history(built.mesh, built.material, built.config,
                                                         build_initial(variant, built.mesh))
        scale = np.max(np.abs(histories["dense"]))
        self.assertLessEqual(np.max(np.abs(histories["dense"] - histories["prony"])) / scale, 1e-6)

    def test_identity_residuals_converge_at_second_order(self):
        study = identity_convergence(bundled("sls_unit"), refinements=2)
        for name, orders in study.orders().items():
            for order in orders:
                self.assertGreaterEqual(order, 1.9, msg=name)

