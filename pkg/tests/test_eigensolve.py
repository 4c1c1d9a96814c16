"""Spectral solver: classical references, Robin cases, projections, serialization."""

import json
import math

import numpy as np
import pytest

from slspectra.core import GridFunction, bc_residual, grid_function, inner_product_rho
from slspectra.eigensolve import (
    ModalCoefficients,
    SpectralDecomposition,
    coefficients_of,
    domain_membership,
    solve_spectrum,
    synthesize,
)
from slspectra.casestudy import transformed_problem, dcr_sl_problem


def test_dirichlet_eigenvalues(dirichlet_dec):
    n = np.arange(1.0, 21.0)
    exact = -(n * math.pi) ** 2
    rel = np.abs(dirichlet_dec.eigenvalues - exact) / np.abs(exact)
    assert np.max(rel) < 1e-10


def test_dirichlet_eigenfunctions(dirichlet_dec):
    z = dirichlet_dec.grid.nodes
    for n in (1, 5, 20):
        phi = dirichlet_dec.eigenfunctions[n - 1].values
        exact = math.sqrt(2.0) * np.sin(n * math.pi * z)
        assert np.max(np.abs(phi - exact)) < 1e-9


def test_neumann_spectrum(neumann_dec):
    # lambda_1 = 0 with constant eigenfunction, then -(n pi)^2
    assert abs(neumann_dec.eigenvalues[0]) < 1e-9
    phi1 = neumann_dec.eigenfunctions[0].values
    assert np.max(np.abs(phi1 - 1.0)) < 1e-8
    assert neumann_dec.eigenvalues[1] == pytest.approx(-math.pi ** 2, rel=1e-10)


def test_orthonormality(transformed_dec50):
    dec = transformed_dec50
    V = dec.values_matrix()
    w = dec.grid.weights  # rho = 1 here
    G = (V * w) @ V.T
    assert np.max(np.abs(G - np.eye(dec.N))) < 1e-10


def test_bc_residuals(transformed_dec50, model):
    prob = transformed_problem(model)
    for f in transformed_dec50.eigenfunctions:
        ra, rb = bc_residual(prob, f)
        assert max(abs(ra), abs(rb)) < 1e-8


def test_robin_eigenvalues_match_closed_form(transformed_dec50, cs_spec50):
    gap = np.abs(transformed_dec50.eigenvalues - cs_spec50.lam)
    assert np.max(gap / np.abs(cs_spec50.lam)) < 1e-10


def test_weighted_route_agrees_after_shift(weighted_dec, cs_spec50, model):
    # similarity invariance: weighted spectrum = -s_n^2 - kappa
    exact = cs_spec50.lam[:10] - model.kappa
    gap = np.abs(weighted_dec.eigenvalues - exact)
    assert np.max(gap / np.abs(exact)) < 1e-7


def test_weighted_eigenrelation(weighted_dec, model):
    # A phi_1 = lambda_1 phi_1 pointwise through the divergence form
    from slspectra.core import apply_operator

    prob = dcr_sl_problem(model)
    phi1 = weighted_dec.eigenfunctions[0]
    af = apply_operator(prob, phi1)
    resid = af.values - weighted_dec.eigenvalues[0] * phi1.values
    assert np.max(np.abs(resid)) < 1e-6


def test_projection_coefficients_linear_function(dirichlet_dec):
    f = grid_function(dirichlet_dec.grid, lambda z: z)
    c = coefficients_of(f, dirichlet_dec)
    n = np.arange(1.0, 21.0)
    exact = math.sqrt(2.0) * (-1.0) ** (n + 1) / (n * math.pi)
    assert np.max(np.abs(c.coefficients - exact)) < 1e-12


def test_synthesize_round_trip(dirichlet_dec):
    rng = np.random.default_rng(5)
    c = ModalCoefficients(rng.standard_normal(20), dirichlet_dec)
    f = synthesize(c)
    back = coefficients_of(f, dirichlet_dec)
    assert np.max(np.abs(back.coefficients - c.coefficients)) < 1e-10


def test_truncate(transformed_dec50):
    small = transformed_dec50.truncate(20)
    assert small.N == 20
    assert np.array_equal(small.eigenvalues, transformed_dec50.eigenvalues[:20])
    assert small.gamma == transformed_dec50.gamma


def test_json_round_trip(neumann_dec):
    doc = json.loads(neumann_dec.to_json())
    assert doc["schema_version"] == 1
    assert np.allclose(doc["eigenvalues"], neumann_dec.eigenvalues)
    V = np.array(doc["eigenfunctions"])
    assert V.shape == (neumann_dec.N, neumann_dec.grid.nodes.size)


def test_domain_membership_verdicts(dirichlet_dec):
    # single-mode data is trivially in D(A)
    e1 = np.zeros(20)
    e1[0] = 1.0
    assert domain_membership(ModalCoefficients(e1, dirichlet_dec)).verdict == "in"
    # f(z) = z has c_n ~ 1/n, so lambda^2 c^2 ~ n^2: far outside D(A)
    f = grid_function(dirichlet_dec.grid, lambda z: z)
    rep = domain_membership(coefficients_of(f, dirichlet_dec))
    assert rep.verdict == "out"


def test_eigenvalue_count_matches_oracle(transformed_dec50, model):
    from slspectra.oracle import assemble, fd_eigs

    op = assemble(transformed_problem(model), M=2000)
    vals, _ = fd_eigs(op, 10)
    assert np.max(np.abs(vals - transformed_dec50.eigenvalues[:10]) / np.abs(vals)) < 1e-3


def test_invalid_inputs(dirichlet_problem):
    with pytest.raises(ValueError):
        solve_spectrum(dirichlet_problem, N=0)
