"""Shared fixtures: expensive decompositions are computed once per session."""

import numpy as np
import pytest

from klspec import (
    BrownianMotion,
    FractionalBrownian,
    Interval,
    OrnsteinUhlenbeck,
    closed_form_brownian_basis,
    nystrom_decompose,
)

UNIT = Interval(0.0, 1.0)


@pytest.fixture(scope="session")
def brownian():
    return BrownianMotion()


@pytest.fixture(scope="session")
def fbm07():
    return FractionalBrownian(0.7)


@pytest.fixture(scope="session")
def ou11():
    return OrnsteinUhlenbeck(1.0, 1.0)


@pytest.fixture(scope="session")
def brownian_512(brownian):
    """Nystrom decomposition used by the spectrum criteria."""
    return nystrom_decompose(brownian, UNIT, 512, "trapezoid")


@pytest.fixture(scope="session")
def brownian_1025(brownian):
    """Finer Brownian decomposition whose nodes contain the uniform 256-partition."""
    return nystrom_decompose(brownian, UNIT, 1025, "trapezoid")


@pytest.fixture(scope="session")
def fbm_1025(fbm07):
    return nystrom_decompose(fbm07, UNIT, 1025, "trapezoid")


@pytest.fixture(scope="session")
def mixed_1000():
    """Closed-form half-integer sine basis, 1000 modes."""
    return closed_form_brownian_basis(1000, "mixed", np.linspace(0.0, 1.0, 513))


@pytest.fixture(scope="session")
def mixed_2000_fine():
    """2000 modes on a grid fine enough to keep the sampled family orthonormal."""
    return closed_form_brownian_basis(2000, "mixed", np.linspace(0.0, 1.0, 2049))


@pytest.fixture(scope="session")
def optimality_rule_bases(brownian, fbm07, ou11):
    """Panel-aligned composite rule decompositions for the optimality corpus."""
    out = {}
    for kernel in (brownian, fbm07, ou11):
        out[kernel.label] = (
            kernel,
            nystrom_decompose(kernel, UNIT, 512, "gauss-legendre", panels=128),
        )
    return out
