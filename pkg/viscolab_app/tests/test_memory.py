import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from viscolab_app.services.energy import box_product
from viscolab_app.services.exceptions import ConfigurationError, InsufficientHistoryError, ValidationError
from viscolab_app.services.kernels import PolynomialKernel, PronyKernel
from viscolab_app.services.memory import DenseHistory, PronyHistory, make_history
from viscolab_app.services.tensor_core import VoigtTensor


def fill(histories, series):
    for values in series:
        for history in histories:
            history.push(values)


class HistoryBasicsTests(SimpleTestCase):
    def setUp(self):
        self.kernel = PronyKernel.from_scalars([(1.0, 1.0)])

    def test_empty_history_has_no_current_values(self):
        history = DenseHistory(self.kernel, 0.1, np.ones(3))
        self.assertEqual(history.time_level, -1)
        with self.assertRaises(InsufficientHistoryError):
            history.current
        with self.assertRaises(InsufficientHistoryError):
            history.convolution()

    def test_first_level_gives_zero_integrals(self):
        for history in (DenseHistory(self.kernel, 0.1, np.ones(3)), PronyHistory(self.kernel, 0.1, np.ones(3))):
            history.push(np.array([1.0, 2.0, 3.0]))
            np.testing.assert_array_equal(history.convolution(), np.zeros(3))
            np.testing.assert_array_equal(history.box(), np.zeros(3))
            self.assertEqual(history.kernel_mass(), 0.0)

    def test_wrong_cell_count_is_rejected(self):
        history = DenseHistory(self.kernel, 0.1, np.ones(3))
        with self.assertRaises(ValidationError):
            history.push(np.ones(4))

    def test_non_positive_time_step_is_rejected(self):
        with self.assertRaises(ValidationError):
            DenseHistory(self.kernel, 0.0, np.ones(3))

    def test_off_grid_time_is_rejected(self):
        history = PronyHistory(self.kernel, 0.1, np.ones(2))
        fill([history], [np.zeros(2)] * 3)
        history.require_time(0.2)
        with self.assertRaises(InsufficientHistoryError):
            history.require_time(0.25)

    def test_initial_values_are_kept(self):
        history = DenseHistory(self.kernel, 0.1, np.ones(2))
        fill([history], [np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        np.testing.assert_array_equal(history.initial, [1.0, 2.0])
        np.testing.assert_array_equal(history.current, [3.0, 4.0])
        self.assertAlmostEqual(history.time, 0.1)


class BackendSelectionTests(SimpleTestCase):
    def test_unknown_backend(self):
        with self.assertRaises(ConfigurationError):
            make_history("fft", PronyKernel.from_scalars([(1.0, 1.0)]), 0.1, np.ones(2))

    def test_prony_backend_requires_prony_kernel(self):
        kernel = PolynomialKernel(VoigtTensor.scalar(1.0), 1.0, 3.0, 3.0)
        with self.assertRaises(ConfigurationError):
            make_history("prony", kernel, 0.1, np.ones(2))
        self.assertIsInstance(make_history("dense", kernel, 0.1, np.ones(2)), DenseHistory)


class BackendEquivalenceTests(SimpleTestCase):
    def test_dense_and_prony_agree(self):
        rng = np.random.default_rng(settings.VIDLAB_SEED)
        kernel = PronyKernel.from_scalars([(4.0, 2.0), (0.5, 0.3)])
        scale = np.array([1.0, 0.5, 2.0, 0.0])
        dense = DenseHistory(kernel, 0.01, scale, capacity=8)
        prony = PronyHistory(kernel, 0.01, scale)
        fill([dense, prony], rng.normal(size=(400, 4)))

        for alpha, beta in ((1.0, 0.0), (0.0, 1.0), (0.7, -0.2)):
            np.testing.assert_allclose(dense.convolution(alpha, beta), prony.convolution(alpha, beta),
                                       rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(dense.box(alpha, beta), prony.box(alpha, beta), rtol=1e-10, atol=1e-12)
            self.assertAlmostEqual(dense.kernel_mass(alpha, beta), prony.kernel_mass(alpha, beta), places=10)

    def test_constant_history_has_zero_box(self):
        kernel = PronyKernel.from_scalars([(1.0, 1.0)])
        dense = DenseHistory(kernel, 0.05, np.ones(2))
        prony = PronyHistory(kernel, 0.05, np.ones(2))
        fill([dense, prony], [np.array([2.0, -1.0])] * 50)
        np.testing.assert_allclose(dense.box(), 0.0, atol=1e-14)
        np.testing.assert_allclose(prony.box(), 0.0, atol=1e-12)

    def test_convolution_of_constant_converges_to_kernel_integral(self):
        kernel = PronyKernel.from_scalars([(4.0, 2.0)])
        errors = []
        for dt in (0.02, 0.01):
            history = PronyHistory(kernel, dt, np.ones(1))
            fill([history], [np.ones(1)] * (int(round(1.0 / dt)) + 1))
            errors.append(abs(history.convolution()[0] - kernel.integral(1.0).value()))
        self.assertLess(errors[0], 1e-3)
        self.assertGreater(errors[0] / errors[1], 3.5)

    def test_empty_kernel_contributes_nothing(self):
        for backend in ("dense", "prony"):
            history = make_history(backend, PronyKernel.empty(), 0.1, np.ones(2))
            fill([history], [np.array([1.0, 2.0]), np.array([0.0, 5.0])])
            np.testing.assert_array_equal(history.convolution(), np.zeros(2))
            np.testing.assert_array_equal(history.box(), np.zeros(2))


class ClosedFormTests(SimpleTestCase):
    """Одно слагаемое Прони (g, r) против точных интегралов на единичной ячейке."""

    g, r, strain, horizon = 2.0, 1.5, 0.7, 1.0

    def history_on(self, backend, dt, strain_at):
        history = make_history(backend, PronyKernel.from_scalars([(self.g, self.r)]), dt, np.ones(1))
        steps = int(round(self.horizon / dt))
        fill([history], [np.array([strain_at(n * dt)]) for n in range(steps + 1)])
        return history

    def test_frozen_strain_memory_integral(self):
        exact = self.g * self.strain * (1.0 - math.exp(-self.r * self.horizon)) / self.r
        for backend in ("dense", "prony"):
            errors = []
            for dt in (0.02, 0.01):
                history = self.history_on(backend, dt, lambda tau: self.strain)
                errors.append(abs(history.convolution()[0] - exact))
                self.assertLessEqual(errors[-1], dt ** 2, msg=backend)
            self.assertGreater(errors[0] / errors[1], 3.5, msg=backend)

    def test_linear_strain_box_product(self):
        rt = self.r * self.horizon
        exact = self.g * self.strain ** 2 * (2.0 - math.exp(-rt) * (rt * rt + 2.0 * rt + 2.0)) / self.r ** 3
        for backend in ("dense", "prony"):
            errors = []
            for dt in (0.02, 0.01):
                history = self.history_on(backend, dt, lambda tau: tau * self.strain)
                errors.append(abs(box_product(history, history.time, 1.0) - exact))
                self.assertLessEqual(errors[-1], dt ** 2, msg=backend)
            self.assertGreater(errors[0] / errors[1], 3.5, msg=backend)
