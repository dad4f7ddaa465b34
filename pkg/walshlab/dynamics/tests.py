import math
from fractions import Fraction

import mpmath
import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st

from dynamics.models import FiniteMPSpace, PremiseViolated, ReducibilityCandidate
from dynamics.serializers import ActionSerializer, ScanSerializer, SimulateSerializer
from dynamics.services import (
    ActionService,
    AverageService,
    DecompositionService,
    InverseService,
    ObservableService,
    SigmaService,
)
from folner.models import FolnerSet
from nilgroup.models import PermElement
from nilgroup.services import CoordinateService, GroupService
from polymap.models import GroupModel
from polymap.services import PolyMapService
from rates.models import RateProfile
from rates.services import GrowthService
from systems.models import System
from systems.services import SystemService
from vncircle.models import REGION_A, REGION_B, REGION_E, AtomicMeasure, CircleObservable
from vncircle.services import CircleService

Z1 = GroupModel.zr(1)
Z2 = GroupModel.zr(2)
HEIS = GroupModel.heis()


def rotation_system(power: int = 1) -> System:
    """
    (1, n -> E_12(n^power))
    """
    n, = PolyMapService.variables(Z1)
    return SystemService.build([PolyMapService.one_parameter(Z1, 2, 1, 2, n ** power)])


def direct_average(action, s, points, fs):
    """
    E_{n in points} prod U_{g_i(n)} f_i без группировки по перестановкам
    """
    points = list(points)
    total = ObservableService.zeros_like(fs[0])
    for n in points:
        term = None
        for g, f in zip(s.maps, fs):
            value = ActionService.apply(action, PolyMapService.evaluate(g, n), f)
            term = value if term is None else term * value
        total = total + term
    return total / len(points)


def perm_power(images, exponent):
    order = GroupService.order(PermElement(tuple(images)))
    images = np.array(images, dtype=np.int64)
    result = np.arange(len(images), dtype=np.int64)
    for _ in range(exponent % order):
        result = images[result]
    return result


class ObservableTest(SimpleTestCase):
    def setUp(self):
        self.space = FiniteMPSpace((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)))

    def test_weighted_norms(self):
        f = ObservableService.make(self.space, [1, -2, "1/2"])
        self.assertEqual(ObservableService.norm2_squared(self.space, f), Fraction(1, 2) + 1 + Fraction(1, 16))
        self.assertEqual(ObservableService.sup_norm(f), 2)
        g = ObservableService.indicator(self.space, [0])
        self.assertEqual(ObservableService.inner(self.space, f, g), Fraction(1, 2))

    def test_float_mode(self):
        f = ObservableService.make(self.space, [1, "1/3", 0], exact=False)
        self.assertFalse(ObservableService.is_exact(f))
        self.assertTrue(ObservableService.equal(f, ObservableService.make(self.space, [1, "1/3", 0])))
        self.assertAlmostEqual(ObservableService.norm2_squared(self.space, f), 0.5 + 1 / 36)

    def test_invalid_space(self):
        with self.assertRaises(ValidationError):
            FiniteMPSpace((Fraction(1, 2), Fraction(1, 3)))
        with self.assertRaises(ValidationError):
            ObservableService.make(self.space, [1, 2])


class ActionTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(1701)

    def test_rotation_operator(self):
        action = ActionService.rotation(4)
        g = GroupService.elementary(2, 1, 2, 3)
        self.assertEqual(list(ActionService.operator(action, g)), [3, 0, 1, 2])
        f = ObservableService.indicator(action.space, [0])
        self.assertEqual(list(ActionService.apply(action, g, f)), [0, 1, 0, 0])
        self.assertEqual(list(ActionService.operator(action, GroupService.elementary(2, 1, 2, -5))), [3, 0, 1, 2])

    def test_operators_form_action(self):
        action = ActionService.heisenberg(3)
        self.assertEqual(action.space.size, 27)
        for _ in range(50):
            g = CoordinateService.from_coordinates(3, [int(e) for e in self.rng.integers(-5, 6, size=3)])
            h = CoordinateService.from_coordinates(3, [int(e) for e in self.rng.integers(-5, 6, size=3)])
            left = ActionService.operator(action, GroupService.mul(g, h))
            right = ActionService.operator(action, h)[ActionService.operator(action, g)]
            self.assertTrue(np.array_equal(left, right))
            f = ObservableService.random(self.rng, action.space)
            composed = ActionService.apply(action, g, ActionService.apply(action, h, f))
            self.assertTrue(ObservableService.equal(ActionService.apply(action, GroupService.mul(g, h), f), composed))

    def test_heisenberg_size(self):
        action = ActionService.heisenberg(4)
        self.assertEqual(action.space.size, 64)
        self.assertEqual(action.period, 4)

    def test_relation_violation(self):
        space = FiniteMPSpace.uniform(3)
        with self.assertRaises(ValidationError):
            ActionService.build(space, 3, {(1, 2): [1, 0, 2], (2, 3): [0, 2, 1]})

    def test_measure_violation(self):
        space = FiniteMPSpace((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)))
        with self.assertRaises(ValidationError):
            ActionService.build(space, 2, {(1, 2): [1, 0, 2]})
        ActionService.build(space, 2, {(1, 2): [0, 2, 1]})

    def test_commuting_block_embedding(self):
        action = ActionService.torus(3, 2)
        self.assertEqual(action.dim, 4)
        self.assertEqual(action.space.size, 9)
        self.assertEqual(action.images((1, 3)), tuple(range(9)))
        with self.assertRaises(ValidationError):
            ActionService.commuting(FiniteMPSpace.uniform(3), [[1, 0, 2], [0, 2, 1]])


class AverageTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(2718)
        self.action = ActionService.rotation(4)
        self.s = rotation_system()
        self.delta = ObservableService.indicator(self.action.space, [0])

    def test_rotation_example(self):
        average = AverageService.av(self.action, self.s, FolnerSet(Z1, 12), [self.delta, self.delta])
        self.assertEqual(average[0], Fraction(1, 4))
        self.assertTrue(ObservableService.equal(average, ObservableService.scale(self.delta, Fraction(1, 4))))
        difference = AverageService.av_diff(self.action, self.s, FolnerSet(Z1, 12), FolnerSet(Z1, 16),
                                            [self.delta, self.delta])
        self.assertTrue(all(value == 0 for value in difference))

    def test_antisymmetry(self):
        fs = [ObservableService.random(self.rng, self.action.space) for _ in range(2)]
        I, I2 = FolnerSet(Z1, 5), FolnerSet(Z1, 7, (2,))
        forward = AverageService.av_diff(self.action, self.s, I, I2, fs)
        backward = AverageService.av_diff(self.action, self.s, I2, I, fs)
        self.assertTrue(ObservableService.equal(forward, -backward))
        self.assertTrue(all(v == 0 for v in AverageService.av_diff(self.action, self.s, I, I, fs)))

    def test_trivial_system(self):
        s = System((PolyMapService.identity(Z1, 2),))
        f = ObservableService.random(self.rng, self.action.space)
        self.assertTrue(ObservableService.equal(AverageService.av(self.action, s, FolnerSet(Z1, 9), [f]), f))

    def test_constants(self):
        action = ActionService.heisenberg(2)
        n, = PolyMapService.variables(Z1)
        s = SystemService.build([
            PolyMapService.one_parameter(Z1, 3, 1, 2, n),
            PolyMapService.from_factors(Z1, 3, [(1, 3, n ** 2), (2, 3, n)]),
        ])
        one = ObservableService.constant(action.space, 1)
        average = AverageService.av(action, s, FolnerSet(Z1, 7, (3,)), [one, one, one])
        self.assertTrue(all(value == 1 for value in average))

    def test_multilinearity(self):
        action = ActionService.rotation(5)
        s = rotation_system(2)
        I = FolnerSet(Z1, 6, (1,))
        for _ in range(100):
            f0, f1, g1 = (ObservableService.random(self.rng, action.space) for _ in range(3))
            c = Fraction(int(self.rng.integers(-4, 5)), 3)
            combined = AverageService.av(action, s, I, [f0, f1 + ObservableService.scale(g1, c)])
            separate = AverageService.av(action, s, I, [f0, f1]) + ObservableService.scale(
                AverageService.av(action, s, I, [f0, g1]), c
            )
            self.assertTrue(ObservableService.equal(combined, separate))

    def test_sup_bound(self):
        for _ in range(20):
            fs = [ObservableService.random(self.rng, self.action.space) for _ in range(2)]
            bound = ObservableService.sup_norm(fs[0]) * ObservableService.sup_norm(fs[1])
            average = AverageService.av(self.action, self.s, FolnerSet(Z1, 6), fs)
            self.assertLessEqual(ObservableService.sup_norm(average), bound)

    def test_shift_covariance(self):
        action = ActionService.heisenberg(2)
        n, = PolyMapService.variables(Z1)
        s = SystemService.build([
            PolyMapService.one_parameter(Z1, 3, 2, 3, n),
            PolyMapService.from_factors(Z1, 3, [(1, 2, n), (1, 3, n ** 2)]),
        ])
        fs = [ObservableService.random(self.rng, action.space) for _ in range(3)]
        for a, b in ((3, 0), (-2, 5), (0, 0)):
            shifted = AverageService.av(action, s, FolnerSet(Z1, 6, (a,), (b,)), fs)
            direct = direct_average(action, s, [(a + m + b,) for m in range(6)], fs)
            self.assertTrue(ObservableService.equal(shifted, direct))

    def test_mismatch(self):
        n, = PolyMapService.variables(Z1)
        s = SystemService.build([PolyMapService.one_parameter(Z1, 3, 1, 2, n)])
        with self.assertRaises(ValidationError):
            AverageService.av(self.action, s, FolnerSet(Z1, 3), [self.delta, self.delta])
        with self.assertRaises(ValidationError):
            AverageService.av(self.action, self.s, FolnerSet(Z2, 3), [self.delta, self.delta])
        with self.assertRaises(ValidationError):
            AverageService.av(self.action, self.s, FolnerSet(Z1, 3), [self.delta])

    def test_float_mode(self):
        fs = [ObservableService.random(self.rng, self.action.space) for _ in range(2)]
        exact = AverageService.av(self.action, self.s, FolnerSet(Z1, 7), fs)
        approximate = AverageService.av(self.action, self.s, FolnerSet(Z1, 7), [f.astype(float) for f in fs])
        self.assertFalse(ObservableService.is_exact(approximate))
        self.assertTrue(ObservableService.equal(approximate, exact))

    def test_commuting_actions_average(self):
        action = ActionService.torus(3, 2)
        m, = PolyMapService.variables(Z1)
        taus = [PolyMapService.one_parameter(Z1, 4, 1, 2, m), PolyMapService.one_parameter(Z1, 4, 3, 4, 2 * m)]
        fs = [ObservableService.random(self.rng, action.space) for _ in range(3)]
        T1, T2 = action.images((1, 2)), action.images((3, 4))
        N = 5

        expected = ObservableService.zeros_like(fs[0])
        for k in range(N):
            first = perm_power(T1, -k)
            second = perm_power(T2, -2 * k)[first]
            expected = expected + fs[0] * fs[1][first] * fs[2][second]
        expected = expected / N

        average = AverageService.commuting_actions_average(action, taus, fs, FolnerSet(Z1, N))
        self.assertTrue(ObservableService.equal(average, expected))


class LimitTest(SimpleTestCase):
    """
    Периодические системы: точный предел, средние по F_P, F_2P и a F_P b совпадают
    """

    def setUp(self):
        self.rng = np.random.default_rng(31415)

    def fixtures(self):
        n, = PolyMapService.variables(Z1)
        x, y = PolyMapService.variables(Z2)
        yield ActionService.rotation(4), rotation_system(1), 4, ((1,), (2,))
        yield (
            ActionService.rotation(3),
            SystemService.build([
                PolyMapService.one_parameter(Z1, 2, 1, 2, n ** 2),
                PolyMapService.one_parameter(Z1, 2, 1, 2, 2 * n),
            ]),
            6,
            ((-4,), (1,)),
        )
        yield (
            ActionService.torus(3, 2),
            SystemService.build([
                PolyMapService.from_factors(Z2, 4, [(1, 2, x), (3, 4, y)]),
                PolyMapService.one_parameter(Z2, 4, 3, 4, x + y),
            ]),
            18,
            ((1, -2), (3, 0)),
        )
        yield (
            ActionService.heisenberg(2),
            SystemService.build([
                PolyMapService.one_parameter(Z1, 3, 1, 2, n),
                PolyMapService.from_factors(Z1, 3, [(1, 2, n), (2, 3, n)]),
            ]),
            4,
            ((5,), (-3,)),
        )
        yield ActionService.heisenberg(3), SystemService.build([PolyMapService.heisenberg_embedding()]), 6, \
            ((1, 2, -1), (0, 1, 3))

    def test_period_fixtures(self):
        for action, s, period, (a, b) in self.fixtures():
            fs = [ObservableService.random(self.rng, action.space) for _ in range(s.j + 1)]
            limit = AverageService.limit_oracle(action, s, fs)
            self.assertTrue(limit.exact)
            self.assertEqual(limit.period, period)
            sets = [FolnerSet(s.model, period), FolnerSet(s.model, period, a, b)]
            if s.model.is_abelian:
                sets.append(FolnerSet(s.model, 2 * period, b, a))
            for I in sets:
                self.assertTrue(ObservableService.equal(AverageService.av(action, s, I, fs), limit.values), msg=str(I))

    def test_rotation_limit(self):
        action = ActionService.rotation(4)
        delta = ObservableService.indicator(action.space, [0])
        limit = AverageService.limit_oracle(action, rotation_system(), [delta, delta])
        self.assertEqual(list(limit.values), [Fraction(1, 4), 0, 0, 0])

    def test_constant_limit(self):
        action = ActionService.heisenberg(2)
        one = ObservableService.constant(action.space, Fraction(2, 3))
        n, = PolyMapService.variables(Z1)
        s = SystemService.build([PolyMapService.one_parameter(Z1, 3, 1, 3, n)])
        limit = AverageService.limit_oracle(action, s, [one, one])
        self.assertTrue(all(value == Fraction(4, 9) for value in limit.values))

    @override_settings(PERIOD_LATTICE_CAP=1)
    def test_horizon_fallback(self):
        action = ActionService.rotation(4)
        fs = [ObservableService.random(self.rng, action.space) for _ in range(2)]
        limit = AverageService.limit_oracle(action, rotation_system(), fs, horizon=10)
        self.assertFalse(limit.exact)
        self.assertEqual(limit.points, 10)
        self.assertTrue(ObservableService.equal(limit.values, AverageService.av(action, rotation_system(), FolnerSet(Z1, 10), fs)))


class ScanTest(SimpleTestCase):
    def setUp(self):
        self.action = ActionService.rotation(4)
        self.s = rotation_system()
        delta = ObservableService.indicator(self.action.space, [0])
        self.fs = [delta, delta]
        self.double = GrowthService.parse("2*M")

    def test_least_passing(self):
        report = AverageService.metastability_scan(self.action, self.s, self.fs, Fraction(1, 10), self.double,
                                                   range(1, 6))
        self.assertEqual([row.passed for row in report.rows], [False, False, True, True, True])
        self.assertEqual(report.least_passing, 3)
        row = report.rows[2]
        self.assertEqual((row.N, row.N2, row.l2_squared), (4, 5, Fraction(9, 1600)))
        self.assertEqual(row.to_row()[:6], ["3", "6", "4", "5", "e|e;e|e", "9/1600"])

    def test_large_epsilon(self):
        report = AverageService.metastability_scan(self.action, self.s, self.fs, Fraction(3), self.double, range(1, 5),
                                                   shifts=[(None, None), ((1,), None)])
        self.assertTrue(report.all_passed)
        self.assertEqual(report.shifts, ("e|e", "1|e"))

    def test_single_set_window(self):
        report = AverageService.metastability_scan(self.action, self.s, self.fs, Fraction(1, 100),
                                                   GrowthService.parse("M"), range(1, 4))
        self.assertTrue(report.all_passed)
        self.assertIsNone(report.rows[0].N)

    def test_ceil_filter(self):
        plain = AverageService.metastability_scan(self.action, self.s, self.fs, Fraction(1, 10), self.double,
                                                  range(1, 4))
        filtered = AverageService.metastability_scan(self.action, self.s, self.fs, Fraction(1, 10), self.double,
                                                     range(1, 4), gamma=Fraction(3))
        self.assertFalse(plain.filtered)
        self.assertFalse(plain.summary()["ceil_filtered"])
        self.assertTrue(filtered.filtered)
        self.assertTrue(filtered.summary()["ceil_filtered"])
        self.assertEqual([row.l2_squared for row in plain.rows], [row.l2_squared for row in filtered.rows])

    def test_norm_precondition(self):
        big = ObservableService.constant(self.action.space, 2)
        with self.assertRaises(ValidationError):
            AverageService.metastability_scan(self.action, self.s, [big, big], Fraction(1), self.double, range(1, 3))

    def test_structured_oscillation(self):
        u = ObservableService.make(self.action.space, [1, "1/2", 0, "-1/2"])
        witness = InverseService.inverse_witness(self.action, self.s, FolnerSet(Z1, 8), [self.fs[0]], u, Fraction(1),
                                                 Fraction(1, 2))
        report = AverageService.structured_oscillation_check(self.action, self.s, [self.fs[0]], witness.sigma,
                                                             Fraction(1, 8), self.double, range(16, 19))
        self.assertEqual(report.bound, 1)
        self.assertTrue(report.all_passed)


class SigmaTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(8)
        self.space = FiniteMPSpace.uniform(4)

    def test_combination(self):
        atoms = [ObservableService.indicator(self.space, [0, 1]), ObservableService.indicator(self.space, [2])]
        f = ObservableService.make(self.space, [2, 2, -3, 0])
        self.assertEqual(SigmaService.sigma_norm(self.space, f, atoms), 5)
        self.assertEqual(SigmaService.sigma_dual(self.space, f, atoms), 1)

    def test_negative_coefficients(self):
        first, second = ObservableService.indicator(self.space, [0]), ObservableService.indicator(self.space, [1, 2])
        self.assertEqual(SigmaService.sigma_norm(self.space, ObservableService.scale(first, -1), [first]), 1)
        difference = ObservableService.make(self.space, [1, -1, -1, 0])
        self.assertEqual(SigmaService.sigma_norm(self.space, difference, [first, second]), 2)
        f = ObservableService.make(self.space, [-2, -3, -3, 0])
        self.assertEqual(SigmaService.sigma_norm(self.space, f, [first, second]), 5)

    def test_redundant_atoms_take_cheapest_combination(self):
        atoms = [ObservableService.indicator(self.space, [0]), ObservableService.indicator(self.space, [1]),
                 ObservableService.make(self.space, [1, -1, 0, 0])]
        f = ObservableService.make(self.space, [-3, 3, 0, 0])
        self.assertEqual(SigmaService.sigma_norm(self.space, f, atoms), 3)

    def test_atoms_have_norm_at_most_one(self):
        atoms = [ObservableService.random(self.rng, self.space) for _ in range(4)]
        for atom in atoms:
            self.assertLessEqual(SigmaService.sigma_norm(self.space, atom, atoms), 1)

    def test_outside_span(self):
        atoms = [ObservableService.indicator(self.space, [0])]
        self.assertEqual(SigmaService.sigma_norm(self.space, ObservableService.indicator(self.space, [1]), atoms),
                         math.inf)
        atoms = [ObservableService.make(self.space, [1, 1, 0, 0])]
        self.assertEqual(SigmaService.sigma_norm(self.space, ObservableService.make(self.space, [1, -1, 0, 0]), atoms),
                         math.inf)
        zero = ObservableService.constant(self.space, 0)
        self.assertEqual(SigmaService.sigma_norm(self.space, zero, []), 0)
        self.assertEqual(SigmaService.sigma_norm(self.space, ObservableService.constant(self.space, 1), []), math.inf)

    def test_duality(self):
        for _ in range(100):
            atoms = [ObservableService.random(self.rng, self.space, 4) for _ in range(3)]
            coefficients = [Fraction(int(c), 2) for c in self.rng.integers(-4, 5, size=3)]
            phi = sum((ObservableService.scale(atom, c) for atom, c in zip(atoms, coefficients)),
                      ObservableService.constant(self.space, 0))
            f = ObservableService.random(self.rng, self.space)
            norm = SigmaService.sigma_norm(self.space, phi, atoms)
            self.assertLessEqual(norm, sum(abs(c) for c in coefficients))
            pairing = abs(ObservableService.inner(self.space, f, phi))
            self.assertLessEqual(pairing, norm * SigmaService.sigma_dual(self.space, f, atoms))


class InverseTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(6174)

    def test_rotation_witness(self):
        action = ActionService.rotation(4)
        s = rotation_system()
        one = ObservableService.constant(action.space, 1)
        u = ObservableService.indicator(action.space, [0])
        witness = InverseService.inverse_witness(action, s, FolnerSet(Z1, 4), [one], u, Fraction(1), Fraction(1))
        self.assertEqual(witness.status, "Witness")
        self.assertEqual(witness.av_norm_squared, Fraction(1, 16))
        self.assertEqual(witness.correlation, Fraction(1, 16))
        self.assertEqual(witness.threshold, Fraction(1, 108))
        self.assertTrue(all(value == Fraction(1, 4) for value in witness.sigma))
        self.assertTrue(witness.passed)

    def test_premise_violated(self):
        action = ActionService.rotation(4)
        s = rotation_system()
        one = ObservableService.constant(action.space, 1)
        u = ObservableService.indicator(action.space, [0])
        result = InverseService.inverse_witness(action, s, FolnerSet(Z1, 4), [one], u, Fraction(1), Fraction(10))
        self.assertIsInstance(result, PremiseViolated)
        self.assertEqual(result.av_norm_squared, Fraction(1, 16))
        result = InverseService.inverse_witness(action, s, FolnerSet(Z1, 4), [one], ObservableService.scale(u, 4),
                                                Fraction(1), Fraction(1))
        self.assertEqual(result.status, "PremiseViolated")
        with self.assertRaises(ValidationError):
            InverseService.inverse_witness(action, System((PolyMapService.identity(Z1, 2),)), FolnerSet(Z1, 4), [],
                                           u, Fraction(1), Fraction(1))

    def corpus(self):
        n, = PolyMapService.variables(Z1)
        yield ActionService.rotation(4), rotation_system(2)
        yield ActionService.heisenberg(2), SystemService.build([
            PolyMapService.one_parameter(Z1, 3, 1, 2, n),
            PolyMapService.from_factors(Z1, 3, [(2, 3, n), (1, 3, n ** 2)]),
        ])

    def test_inverse_contract(self):
        fixtures = list(self.corpus())
        C, epsilon = Fraction(1), Fraction(1, 2)
        witnessed = 0
        attempts = 0
        while witnessed < 100 and attempts < 1000:
            attempts += 1
            action, s = fixtures[attempts % len(fixtures)]
            fs = [ObservableService.random(self.rng, action.space) for _ in range(s.j)]
            u = ObservableService.scale(ObservableService.random(self.rng, action.space), 3)
            a = (int(self.rng.integers(-5, 6)),)
            I = FolnerSet(Z1, 8, a)
            result = InverseService.inverse_witness(action, s, I, fs, u, C, epsilon)
            if isinstance(result, PremiseViolated):
                continue
            witnessed += 1
            self.assertTrue(result.passed)
            self.assertEqual(result.correlation, result.av_norm_squared / result.u_sup)
            self.assertLessEqual(ObservableService.sup_norm(result.sigma), 1)

            probe = FolnerSet(Z1, 2, (int(self.rng.integers(-3, 4)),), (int(self.rng.integers(-3, 4)),))
            candidate = InverseService.canonical_candidate(result, probe)
            self.assertTrue(InverseService.check_candidate(result.sigma, action, s, Fraction(1, 2), probe, candidate))
            report = InverseService.is_reducible(result.sigma, action, s, Fraction(1, 2), 8, [probe], witness=result)
            self.assertTrue(report.reducible)
            self.assertTrue(report.sampled)
        self.assertEqual(witnessed, 100)


class ReducibilityTest(SimpleTestCase):
    def setUp(self):
        self.action = ActionService.rotation(4)
        self.s = rotation_system()
        self.probe = FolnerSet(Z1, 2)

    def test_indicator_not_reducible_without_witness(self):
        sigma = ObservableService.indicator(self.action.space, [0])
        report = InverseService.is_reducible(sigma, self.action, self.s, Fraction(1, 2), 5, [self.probe])
        self.assertFalse(report.reducible)
        self.assertEqual(report.to_dict()["probes"][0]["witness"], None)

    def test_explicit_candidate(self):
        one = ObservableService.constant(self.action.space, 1)
        candidate = ReducibilityCandidate("constant", None, ((0,),), (one,))
        report = InverseService.is_reducible(one, self.action, self.s, Fraction(1, 2), 5, [self.probe],
                                             candidates=[candidate])
        self.assertTrue(report.reducible)
        self.assertEqual(report.probes[0][1], "constant")

    def test_gamma_two(self):
        sigma = ObservableService.indicator(self.action.space, [0, 3])
        report = InverseService.is_reducible(sigma, self.action, self.s, Fraction(2), 3, [FolnerSet(Z1, 3, (4,))])
        self.assertTrue(report.reducible)
        self.assertEqual(report.probes[0][1], "zero")

    def test_preconditions(self):
        big = ObservableService.constant(self.action.space, 2)
        with self.assertRaises(ValidationError):
            InverseService.is_reducible(big, self.action, self.s, Fraction(1, 2), 5, [self.probe])
        sigma = ObservableService.constant(self.action.space, 0)
        with self.assertRaises(ValidationError):
            InverseService.is_reducible(sigma, self.action, self.s, Fraction(1, 2), 4, [self.probe])


class DecompositionTest(SimpleTestCase):
    def setUp(self):
        self.space = FiniteMPSpace.uniform(4)
        self.atom = ObservableService.make(self.space, [1, "-1/2", 0, "1/4"])
        self.zero = ObservableService.constant(self.space, 0)
        self.params = DecompositionService.params_from_rates(
            Fraction(1), [self.atom], [self.atom], RateProfile(ladder_length=2)
        )

    def test_params_from_rates(self):
        self.assertEqual(self.params.delta, Fraction(1, 36))
        self.assertEqual(self.params.c_sequence, (Fraction(432), Fraction(1)))
        self.assertEqual(self.params.eta(Fraction(432)), Fraction(1, 216 * 432))

    def test_small_v(self):
        f = ObservableService.make(self.space, ["1/100", 0, "-1/100", 0])
        check = DecompositionService.verify_decomposition(self.space, f, self.zero, self.zero, f, 1, self.params)
        self.assertTrue(check.passed)
        big = ObservableService.scale(f, 10)
        self.assertFalse(DecompositionService.verify_decomposition(self.space, big, self.zero, self.zero, big, 1,
                                                                   self.params).v_ok)

    def test_single_atom(self):
        check = DecompositionService.verify_decomposition(self.space, self.atom, self.atom, self.zero, self.zero, 1,
                                                          self.params)
        self.assertLessEqual(check.sigma_norm, 1)
        self.assertTrue(check.passed)
        outside = ObservableService.indicator(self.space, [2])
        check = DecompositionService.verify_decomposition(self.space, outside, outside, self.zero, self.zero, 1,
                                                          self.params)
        self.assertFalse(check.sigma_ok)

    def test_preconditions(self):
        with self.assertRaises(ValidationError):
            DecompositionService.verify_decomposition(self.space, self.atom, self.zero, self.zero, self.zero, 1,
                                                      self.params)
        with self.assertRaises(ValidationError):
            DecompositionService.verify_decomposition(self.space, self.atom, self.atom, self.zero, self.zero, 3,
                                                      self.params)

    def test_vn_decomposition(self):
        epsilon = Fraction(1, 2)
        angles = (Fraction(0), Fraction(1, 2), Fraction(1, 1000), Fraction(1, 7))
        weights = (Fraction(1, 4),) * 4
        values = (Fraction(1), Fraction(1, 2), Fraction(-1, 4), Fraction(3, 4))
        mu = AtomicMeasure(angles, weights)
        decomposition = CircleService.pigeonhole_decompose(
            CircleObservable(tuple(mpmath.mpc(float(v)) for v in values)), mu, epsilon, GrowthService.parse("2*M"), 10
        )

        space = FiniteMPSpace(weights)

        def part(region):
            return ObservableService.make(space, [v if label == region else 0
                                                  for v, label in zip(values, decomposition.labels)])

        f = ObservableService.make(space, values)
        atoms = [ObservableService.indicator(space, [x]) for x in range(space.size)]
        params = DecompositionService.params_from_rates(epsilon, atoms, [], RateProfile(delta=epsilon / 6,
                                                                                        ladder_length=2))
        check = DecompositionService.verify_decomposition(space, f, part(REGION_A), part(REGION_B), part(REGION_E), 1,
                                                          params)
        self.assertTrue(check.passed)

    def test_truncation(self):
        rng = np.random.default_rng(99)
        C = Fraction(2)
        for _ in range(50):
            f = ObservableService.random(rng, self.space)
            sigma = ObservableService.scale(ObservableService.random(rng, self.space), C)
            v = ObservableService.scale(ObservableService.random(rng, self.space), 5)
            u = f - sigma - v
            truncated = DecompositionService.truncate_pseudorandom(u, v, C)
            self.assertTrue(ObservableService.equal(truncated.u + truncated.v, u + v))
            self.assertTrue(truncated.bounded)

    def test_separation(self):
        f = self.atom
        phi = ObservableService.scale(f, 1 / ObservableService.norm2_squared(self.space, f))
        tiny = [[ObservableService.scale(f, Fraction(1, 1000))], [self.zero]]
        self.assertTrue(DecompositionService.separation_verify(self.space, f, phi, tiny, [Fraction(2), Fraction(5)]))
        self.assertFalse(DecompositionService.separation_verify(self.space, f, ObservableService.scale(phi, Fraction(1, 2)),
                                                                tiny, [Fraction(2), Fraction(5)]))
        self.assertFalse(DecompositionService.separation_verify(self.space, f, self.zero, tiny,
                                                                [Fraction(2), Fraction(5)]))
        self.assertFalse(DecompositionService.separation_verify(self.space, f, phi, [[f]], [Fraction(2)]))


class PropertyTest(SimpleTestCase):
    @hypothesis_settings(deadline=None, max_examples=30)
    @given(st.lists(st.integers(-3, 3), min_size=4, max_size=4), st.integers(1, 9), st.integers(-6, 6))
    def test_limit_equals_period_box(self, numerators, N, shift):
        action = ActionService.rotation(4)
        f = ObservableService.make(action.space, [Fraction(k, 3) for k in numerators])
        limit = AverageService.limit_oracle(action, rotation_system(), [f, f])
        self.assertTrue(ObservableService.equal(
            AverageService.av(action, rotation_system(), FolnerSet(Z1, 4 * N, (shift,)), [f, f]), limit.values
        ))


class SerializersTest(SimpleTestCase):
    def maps(self):
        return [{"model": {"kind": "zr", "rank": 1}, "dim": 2, "entries": {"1,2": {"1": 1}}}]

    def test_action(self):
        serializer = ActionSerializer(data={"fixture": "heisenberg", "q": 2})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["instance"].space.size, 8)
        serializer = ActionSerializer(data={
            "space": {"size": 3}, "dim": 3,
            "generators": [{"position": [1, 2], "images": [1, 0, 2]}, {"position": [2, 3], "images": [0, 2, 1]}],
        })
        self.assertFalse(serializer.is_valid())
        self.assertFalse(ActionSerializer(data={"fixture": "rotation"}).is_valid())

    def test_simulate(self):
        serializer = SimulateSerializer(data={
            "action": {"fixture": "rotation", "q": 4},
            "maps": self.maps(),
            "observables": [[1, 0, 0, 0], [1, 0, 0, 0]],
            "sets": [{"model": {"kind": "zr", "rank": 1}, "N": 12}],
        })
        self.assertTrue(serializer.is_valid(), serializer.errors)
        data = serializer.validated_data
        average = AverageService.av(data["action"]["instance"], data["system"], data["sets"][0]["instance"], data["fs"])
        self.assertEqual(average[0], Fraction(1, 4))

    def test_scan(self):
        payload = {
            "action": {"fixture": "rotation", "q": 4},
            "maps": self.maps(),
            "observables": [[1, 0, 0, 0], [1, 0, 0, 0]],
            "epsilon": "1/10",
            "growth": "2*M",
            "M_to": 5,
            "shifts": [{"a": [1]}, {}],
        }
        serializer = ScanSerializer(data=payload)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["shifts"], [((1,), None), (None, None)])
        self.assertFalse(ScanSerializer(data={**payload, "observables": [[1, 0, 0, 0]]}).is_valid())
        self.assertFalse(ScanSerializer(data={**payload, "unknown": 1}).is_valid())
        self.assertFalse(ScanSerializer(data={**payload, "shifts": [{"a": [1, 2]}]}).is_valid())
