import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from chebflat.flatexp import build_flat, choose_flat_params
from chebflat.qham.gibbs import TraceEstimator, gibbs_state
from chebflat.qham.pauli import LocalHamiltonian, PauliString, pauli_set_klG
from chebflat.qham.pop import (Constraint, PopInstance, ResidualOnlyError, SparsePoly,
                               add_ball_constraint, assemble_pop, eps0_value, export_pop,
                               flat_requirement, import_pop, learn, max_violation,
                               pop_from_dict, pop_to_dict, residual_report, residuals)
from chebflat.qham.presets import PRESETS, build_preset, preset_flat


@pytest.fixture(scope="module")
def single():
    return build_preset("single-qubit")


@pytest.fixture(scope="module")
def small2():
    """Two terms on two qubits, small enough to expand symbolically."""
    H = LocalHamiltonian([PauliString("ZI"), PauliString("XX")], [0.6, -0.35])
    beta = 0.5
    flat = preset_flat(H, beta, 0.01, 1.0, 5e-4, 0.5)
    S = pauli_set_klG(H, 1)
    pop = assemble_pop(H, beta, 0.01, 1.0, TraceEstimator(), flat, A_set=S[:4], B_set=S[:6])
    return pop, H


def test_single_qubit_commutation_vanishes(single):
    pop, _ = single
    comm = [c for c in pop.constraints if c.kind == "commutation"]
    assert comm
    for c in comm:
        for p in c.parts:
            assert all(abs(v) <= 1e-15 for _, v in p.terms)
        assert c.lhs([0.3]) == pytest.approx(0.0, abs=1e-28)


def test_constraint_count(single, small2):
    pop, _ = single
    nA, nB = len(pop.metadata["A_set"]), len(pop.metadata["B_set"])
    assert len(pop.constraints) == nA**2 + nB**2
    assert pop.kinds().count("commutation") == nA**2
    pop2, _ = small2
    assert len(pop2.constraints) == 4**2 + 6**2


def test_pair_cap_truncates_with_flag():
    H = LocalHamiltonian([PauliString("Z")], [0.7])
    flat = preset_flat(H, 1.0, 0.01, 1.0, 5e-4, 0.5)
    S = pauli_set_klG(H, 1)
    pop = assemble_pop(H, 1.0, 0.01, 1.0, TraceEstimator(), flat, A_set=S, B_set=S, pair_cap=4)
    assert len(pop.constraints) == 8
    assert pop.metadata["comm_pairs_truncated"] and pop.metadata["flat_pairs_truncated"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_truth_is_feasible(name):
    pop, H = build_preset(name)
    rep = residual_report(pop, H.couplings)
    assert rep["all_pass"]
    r = residuals(pop, H.couplings)
    kinds = np.array(pop.kinds())
    # [H, rho(H)] = 0, so the commutation parts vanish up to rounding
    assert np.all(np.sqrt(r[kinds == "commutation"]) <= 1e-10)
    assert np.all(np.sqrt(r[kinds == "flat-exp"]) <= pop.metadata["eps"])
    assert max_violation(pop, H.couplings) <= 0


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_negated_truth_is_infeasible(name):
    pop, H = build_preset(name)
    assert not residual_report(pop, -np.asarray(H.couplings))["all_pass"]


def test_zero_hamiltonian_regression(single):
    pop, H = single
    r = residuals(pop, [0.0])
    kinds = np.array(pop.kinds())
    assert np.all(r[kinds == "commutation"] == 0)
    # Q(0 | B1) = Q(0) B1 with Q(0) ~ 1, so z ~ Tr(B2 B1 rho) - Tr(B1 B2 rho)
    rho = gibbs_state(H, 1.0)
    B = [PauliString(s).to_dense() for s in pop.metadata["B_set"]]
    expect = [abs(np.trace(b2 @ b1 @ rho) - np.trace(b1 @ b2 @ rho)) ** 2
              for b1 in B for b2 in B]
    assert np.allclose(r[kinds == "flat-exp"], expect, atol=1e-6)
    # recorded value: 4 tanh(0.7)^2 for the (X, Y) and (Y, X) pairs
    assert r.max() == pytest.approx(4 * math.tanh(0.7) ** 2, rel=1e-6)


def test_symbolic_matches_numeric(small2):
    pop, H = small2
    assert not pop.residual_only
    rng = np.random.default_rng(20)
    for lam in rng.uniform(-1, 1, size=(20, 2)):
        a = residuals(pop, lam, "numeric")
        b = residuals(pop, lam, "symbolic")
        assert np.max(np.abs(a - b)) <= 1e-9


def test_degree_and_exponent_length(small2):
    pop, _ = small2
    D = pop.metadata["flat"]["degree"]
    for c in pop.constraints:
        for p in c.parts:
            assert p.degree <= D
            assert all(len(e) == pop.m for e, _ in p.terms)
    assert pop.metadata["monomial_count"] == sum(len(p.terms) for c in pop.constraints
                                                 for p in c.parts)


def test_residuals_reject_bad_input(single):
    pop, _ = single
    with pytest.raises(ValueError):
        residuals(pop, [1.5])
    with pytest.raises(ValueError):
        residuals(pop, [0.1, 0.2])


def test_ball_constraint(small2):
    pop, H = small2
    ball = add_ball_constraint(pop)
    assert ball.ball_radius == pytest.approx(math.sqrt(2))
    assert ball.constraints[-1].kind == "ball"
    corner = [1.0, -1.0]
    assert ball.constraints[-1].lhs(corner) == pytest.approx(ball.ball_radius ** 2)
    before = residuals(pop, H.couplings)
    after = residuals(ball, H.couplings)
    assert np.array_equal(after[:-1], before)
    assert residual_report(ball, H.couplings)["all_pass"]
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        add_ball_constraint(pop, 1.0)
    assert any("cut the box" in str(x.message) for x in w)


def test_export_round_trip(small2, tmp_path):
    pop, _ = small2
    pop = add_ball_constraint(pop)
    path = tmp_path / "pop.json"
    export_pop(pop, path)
    doc = json.loads(path.read_text())
    assert "ball" in [c["kind"] for c in doc["constraints"]]
    back = import_pop(path)
    rng = np.random.default_rng(10)
    for lam in rng.uniform(-1, 1, size=(10, 2)):
        assert np.array_equal(residuals(back, lam), residuals(pop, lam, "symbolic"))
    assert back.monomial_count == pop.monomial_count == doc["metadata"]["monomial_count"]


def test_export_fractions_exact(tmp_path):
    p = SparsePoly(2, (((1, 0), Fraction(1, 3)), ((0, 2), Fraction(-7, 11)), ((0, 0), 2)))
    pop = PopInstance(2, (Constraint("flat-exp", 0.5, "q", (p,)),))
    back = pop_from_dict(json.loads(json.dumps(pop_to_dict(pop))))
    assert back.constraints[0].parts[0].terms == p.terms
    lam = [Fraction(1, 2), Fraction(-2, 5)]
    assert back.constraints[0].parts[0](lam) == p(lam)


def test_export_empty_instance(tmp_path):
    H = LocalHamiltonian([PauliString("Z")], [0.7])
    flat = preset_flat(H, 1.0, 0.01, 1.0, 5e-4, 0.5)
    pop = assemble_pop(H, 1.0, 0.01, 1.0, TraceEstimator(), flat, A_set=[], B_set=[])
    path = tmp_path / "empty.json"
    export_pop(pop, path)
    doc = json.loads(path.read_text())
    assert doc["constraints"] == []
    assert len(residuals(import_pop(path), [0.2])) == 0


def test_export_residual_only_raises(tmp_path):
    pop, _ = build_preset("zz-chain-4")
    assert pop.residual_only
    with pytest.raises(ResidualOnlyError):
        export_pop(pop, tmp_path / "x.json")
    with pytest.raises(ResidualOnlyError):
        residuals(pop, np.zeros(4), "symbolic")


def test_import_rejects_unknown_schema():
    with pytest.raises(ValueError):
        pop_from_dict({"schema": "other/9"})


def test_eps0_formula_and_flush():
    v, info = eps0_value(0.5, 1.0, 0.1, 2)
    assert v == pytest.approx(0.5 ** (10 ** 0.1) / 8)
    assert not info["eps0_flushed"]
    v, info = eps0_value(0.01, 1.0, 1.0, 1)
    assert v == pytest.approx(1e-20)
    v, info = eps0_value(0.01, 1.0, 3.0, 4)
    assert info["eps0_flushed"] and v == np.nextafter(0.0, 1.0)
    assert info["eps0_log"] < -745
    v, info = eps0_value(0.01, 1.0, 3.0, 4, override=1e-12)
    assert v == 1e-12 and info["eps0_overridden"]


def test_eps0_override_in_metadata():
    pop, _ = build_preset("single-qubit", eps0_override=1e-9)
    assert pop.metadata["eps0"] == 1e-9 and pop.metadata["eps0_overridden"]
    assert all(c.rhs == 1e-9 for c in pop.constraints if c.kind == "commutation")


def test_flat_requirement_enforced():
    H = LocalHamiltonian([PauliString("Z")], [0.7])
    req = flat_requirement(1.0, 1.0, 0.01)
    assert req["eta"] == 5.0 and req["t"] == pytest.approx(1e-6)
    loose = build_flat(choose_flat_params(0.05, 0.5, 2.0))
    S = pauli_set_klG(H, 1)
    with pytest.raises(ValueError):
        assemble_pop(H, 1.0, 0.01, 1.0, TraceEstimator(), loose, A_set=S, B_set=S)
    pop = assemble_pop(H, 1.0, 0.01, 1.0, TraceEstimator(), loose, A_set=S, B_set=S,
                       override_flat=True)
    assert pop.metadata["flat_override"] and not pop.metadata["flat_requirement_met"]


def test_assemble_validation():
    H = LocalHamiltonian([PauliString("Z")], [0.7])
    flat = preset_flat(H, 1.0, 0.01, 1.0, 5e-4, 0.5)
    for beta, eps, ckg in ((0.0, 0.01, 1.0), (1.0, 1.5, 1.0), (1.0, 0.01, 0.0)):
        with pytest.raises(ValueError):
            assemble_pop(H, beta, eps, ckg, TraceEstimator(), flat, A_set=[], B_set=[])


def test_shot_noise_instance_is_seeded():
    a, _ = build_preset("single-qubit", trace="shot-noise", samples=10**6, seed=3)
    b, _ = build_preset("single-qubit", trace="shot-noise", samples=10**6, seed=3)
    c, _ = build_preset("single-qubit", trace="shot-noise", samples=10**6, seed=4)
    lam = [0.5]
    assert np.array_equal(residuals(a, lam), residuals(b, lam))
    assert not np.array_equal(residuals(a, lam), residuals(c, lam))
    assert a.metadata["trace"] == {"mode": "shot-noise", "samples": 10**6, "seed": 3}


def test_learn_single_qubit(single):
    pop, H = single
    lam, rep = learn(pop, starts=4, seed=0)
    assert abs(lam[0] - 0.7) <= 0.02
    assert rep["feasible"]
    assert len(rep["starts"]) == 4 and rep["wall_time"] >= 0
    assert all(s["trajectory"] for s in rep["starts"])
    lam2, rep2 = learn(pop, starts=4, seed=0)
    assert np.array_equal(lam, lam2) and rep["objective"] == rep2["objective"]


def test_learn_from_imported_instance(small2, tmp_path):
    pop, H = small2
    export_pop(pop, tmp_path / "p.json")
    back = import_pop(tmp_path / "p.json")
    lam, rep = learn(back, starts=3, seed=1)
    assert np.max(np.abs(lam - np.asarray(H.couplings))) <= 0.05
