"""Shared fixtures; expensive calibration solves run once per session."""

import numpy as np
import pytest

from anisoeig import domain, norms
from anisoeig.eigensolver import EigenProblem, SolverOptions, refine_and_solve


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow-acceptance",
        action="store_true",
        default=False,
        help="skip the corpus-scale acceptance criteria (5, 7, 9, 11)",
    )


UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
THIN_RECT = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.1], [0.0, 0.1]]

CORPUS_NORMS = [
    {"family": "euclidean"},
    {"family": "pnorm", "p": 1.5},
    {"family": "pnorm", "p": 3.0},
    {"family": "pnorm", "p": 4.0},
    {"family": "quadratic", "A": [[2.0, 0.5], [0.5, 1.0]]},
]


def corpus_config(bc: str) -> dict:
    return {
        "generator": {
            "count": 20,
            "seed": 2024,
            "n_points": 8,
            "norms": CORPUS_NORMS,
            "solver": {
                "bc": bc,
                "levels": [3, 4, 5],
                "grad_tol": 1e-4,
                "max_iters": 6000,
                "restarts": 2,
                "seed": 11,
            },
            "checks": [{"name": "poincare_bound"}],
        }
    }


@pytest.fixture(scope="session")
def square():
    return domain.ConvexPolygon(UNIT_SQUARE)


@pytest.fixture(scope="session")
def thin_rect():
    return domain.ConvexPolygon(THIN_RECT)


@pytest.fixture(scope="session")
def calibration_chains(square):
    """Unit square, euclidean gauge, levels 3..6, both boundary conditions."""
    out = {}
    for bc in ("neumann", "dirichlet"):
        prob = EigenProblem(square, norms.euclidean(), bc,
                            options=SolverOptions(grad_tol=1e-6, restarts=2, seed=3))
        out[bc] = refine_and_solve(prob, [3, 4, 5, 6])
    return out


@pytest.fixture(scope="session")
def comparison_solves(square, thin_rect):
    """Neumann solves on square and thin rectangle for euclidean and p=4,
    at two consecutive levels (gradient-comparison and bound criteria)."""
    levels = [3, 4, 5, 6]
    out = {}
    for dom_name, poly in (("square", square), ("thin", thin_rect)):
        for spec_name, spec in (("euclidean", norms.euclidean()), ("p4", norms.p_norm(4))):
            prob = EigenProblem(poly, spec, "neumann",
                                options=SolverOptions(grad_tol=1e-5, restarts=2, seed=5))
            out[(dom_name, spec_name)] = refine_and_solve(prob, levels)
    return out
