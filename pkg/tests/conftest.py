from __future__ import annotations

import pytest

from hjbprice import GridSpec, ModelParams, NumericalParams, UtilityFunction, build_mesh, solve
from hjbprice.pricing import indifference_price


@pytest.fixture(scope="session")
def market():
    return ModelParams()


@pytest.fixture(scope="session")
def ref_mesh(market):
    return build_mesh(GridSpec(), market)


@pytest.fixture(scope="session")
def exp_utility():
    return UtilityFunction.exponential(0.1)


@pytest.fixture(scope="session")
def exp_fields(market, ref_mesh, exp_utility):
    """Reference-grid exponential solves for delta in (-1, 0, +1)."""
    num = NumericalParams()
    return {d: solve(ref_mesh, market, num, exp_utility, delta=d) for d in (-1, 0, 1)}


@pytest.fixture(scope="session")
def exp_surface(exp_fields, market, ref_mesh, exp_utility):
    return indifference_price(exp_fields[0][0], exp_fields[-1][0], exp_utility, market, ref_mesh)


@pytest.fixture(scope="session")
def linear_fields(market, ref_mesh):
    num = NumericalParams()
    u = UtilityFunction.linear()
    return {d: solve(ref_mesh, market, num, u, delta=d) for d in (-1, 0, 1)}
