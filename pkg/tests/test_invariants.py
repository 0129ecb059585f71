import numpy as np
import pytest

from qmstab import (
    ModelSpec,
    OperatorError,
    Verdict,
    connectivity_check,
    connectivity_scan,
    faithfulness_check,
    generator_schroedinger,
    ket_bra,
    number_operator,
    pauli,
    steady_states,
    subharmonicity_check,
    uniqueness_check,
)
from conftest import oscillator, random_model


def trace_distance(a, b):
    w = np.linalg.eigvalsh(a - b)
    return 0.5 * np.abs(w).sum()


class TestSteadyStates:
    def test_flip_model_maximally_mixed(self, twolevel):
        report = steady_states(twolevel)
        assert report.null_dimension == 1
        assert report.unique == "unique"
        assert trace_distance(report.states[0].matrix, np.eye(2) / 2) < 1e-10
        assert report.faithful == (True,)
        assert all(report.reliable)

    def test_decay_model_ground_state(self, qubit_decay):
        report = steady_states(qubit_decay)
        assert trace_distance(report.states[0].matrix, np.diag([0.0, 1.0])) < 1e-10
        assert report.faithful == (False,)

    def test_oscillator_mean_photon_number(self):
        # fixed point of d<n>/dt = -0.75 <n> + 0.25; exercises the
        # large-dimension Arnoldi path
        n = 30
        report = steady_states(oscillator(n))
        mean = np.trace(report.states[0].matrix @ number_operator(n)).real
        assert abs(mean - 1.0 / 3.0) < 1e-6
        assert report.unique == "unique"

    def test_degenerate_null_space(self, dephasing):
        report = steady_states(dephasing)
        assert report.null_dimension == 2
        assert report.unique == "not_unique"
        assert len(report.states) == 2
        for dm, resid in zip(report.states, report.residuals):
            assert resid <= 10 * report.tolerance * max(1.0, report.liouvillian_norm)

    def test_reported_residual_bound(self, rng):
        for _ in range(5):
            model = random_model(4, rng, n_couplings=2)
            report = steady_states(model)
            for dm in report.states:
                resid = np.abs(generator_schroedinger(model, dm.matrix)).max()
                assert resid <= 10 * report.tolerance * max(1.0, report.liouvillian_norm)


class TestFaithfulness:
    def test_maximally_mixed(self):
        res = faithfulness_check(np.eye(2) / 2)
        assert res.faithful and res.rank == 2
        np.testing.assert_allclose(res.support, np.eye(2), atol=1e-12)

    def test_pure_state(self):
        res = faithfulness_check(np.diag([0.0, 1.0]))
        assert not res.faithful and res.rank == 1
        np.testing.assert_allclose(res.support, np.diag([0.0, 1.0]), atol=1e-12)

    def test_computed_invariant_state_is_faithful(self, twolevel):
        report = steady_states(twolevel)
        assert faithfulness_check(report.states[0]).faithful


class TestConnectivity:
    def test_flip_model_both_projections(self, twolevel):
        for i in (0, 1):
            res = connectivity_check(twolevel, ket_bra(i, i, 2))
            assert res.connected
            assert res.value == pytest.approx(1.0)

    def test_oscillator_neighbor_rates(self):
        # contributions i |alpha|^2 (down) and (i+1) |beta|^2 (up)
        n = 10
        model = oscillator(n)
        for i in (1, 3, 5):
            res = connectivity_check(model, ket_bra(i, i, n))
            assert res.value == pytest.approx(i * 1.0 + (i + 1) * 0.25)

    def test_diagonal_coupling_disconnected(self, dephasing):
        res = connectivity_check(dephasing, ket_bra(0, 0, 2))
        assert not res.connected
        assert res.value < 1e-12

    def test_trivial_projection_rejected(self, twolevel):
        with pytest.raises(OperatorError, match="non-trivial"):
            connectivity_check(twolevel, np.eye(2))

    def test_scan_coordinate_family(self, twolevel):
        scan = connectivity_scan(twolevel, "coordinate")
        assert scan.all_connected
        assert scan.counterexample is None

    def test_scan_oscillator_with_partial_sums(self):
        scan = connectivity_scan(oscillator(8), "coordinate")
        assert scan.all_connected
        labels = [r.label for r in scan.results]
        assert any("partial sum" in l for l in labels)

    def test_scan_spectral_family(self, twolevel):
        scan = connectivity_scan(twolevel, np.diag([1.0, 0.0]).astype(complex))
        assert scan.all_connected

    def test_block_model_counterexample(self):
        # two decoupled qubits in a 2 + 2 block split: block projections
        # are not connected to their complement
        l = np.kron(np.eye(2), pauli("minus")).astype(complex)
        model = ModelSpec(np.zeros((4, 4), dtype=complex), [l])
        family = [
            np.kron(np.diag([1.0, 0.0]), np.eye(2)).astype(complex),
            np.kron(np.diag([0.0, 1.0]), np.eye(2)).astype(complex),
        ]
        scan = connectivity_scan(model, family)
        assert not scan.all_connected
        assert scan.counterexample.value < 1e-12


class TestUniqueness:
    def test_flip_model_unique(self, twolevel):
        res = uniqueness_check(twolevel)
        assert res.verdict == "unique"
        assert res.commutant_dimension == 1
        assert res.stabilized

    def test_dephasing_not_unique(self, dephasing):
        res = uniqueness_check(dephasing)
        assert res.verdict == "not_unique"
        assert res.commutant_dimension == 2

    def test_dimension_one(self):
        model = ModelSpec(np.zeros((1, 1), dtype=complex), [np.ones((1, 1), dtype=complex)])
        assert uniqueness_check(model).verdict == "unique"

    def test_two_qubit_reducible(self, twoqubit):
        res = uniqueness_check(twoqubit)
        assert res.verdict == "not_unique"
        assert res.commutant_dimension == 2

    def test_agrees_with_null_dimension(self, twolevel, dephasing, twoqubit, qubit_decay):
        for model in (twolevel, dephasing, twoqubit, qubit_decay):
            unique = uniqueness_check(model).verdict == "unique"
            null_dim = steady_states(model).null_dimension
            assert unique == (null_dim == 1)

    def test_irreducible_randoms_chain(self, rng):
        # dense random couplings are generically irreducible: the commutant
        # verdict, the null dimension, and faithfulness must line up
        for _ in range(5):
            model = random_model(4, rng)
            res = uniqueness_check(model)
            report = steady_states(model)
            if res.verdict == "unique":
                assert report.null_dimension == 1
                scan = connectivity_scan(model, "coordinate")
                if scan.all_connected:
                    assert report.faithful[0]


class TestSubharmonicity:
    def test_identity_projection(self, twolevel):
        assert subharmonicity_check(twolevel, np.eye(2)).verdict is Verdict.HOLDS

    def test_invariant_support(self, qubit_decay):
        report = steady_states(qubit_decay)
        res = subharmonicity_check(qubit_decay, report.support_projections[0], tol=1e-7)
        assert res.verdict is Verdict.HOLDS

    def test_generic_projection_fails(self, twolevel):
        res = subharmonicity_check(twolevel, ket_bra(0, 0, 2))
        assert res.verdict is Verdict.FAILS
        assert res.witness is not None

    def test_all_computed_supports_subharmonic(self, twolevel, dephasing, twoqubit):
        for model in (twolevel, dephasing, twoqubit):
            report = steady_states(model)
            for p in report.support_projections:
                res = subharmonicity_check(model, p, tol=1e-7)
                assert res.verdict is Verdict.HOLDS
