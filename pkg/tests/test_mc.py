import math

import pytest

from hjbprice.errors import ConfigError, UtilityDomainError
from hjbprice.mc import McConfig, buy_and_hold_utility
from hjbprice.model import ModelParams, UtilityFunction

LIN = UtilityFunction.linear()
EXP = UtilityFunction.exponential(0.1)
LOGNORMAL_MEAN = 62.63660046121278815  # 33.3 e^{0.05} + 0.5 * 50 e^{0.1} (mpmath)


def test_degenerate_diffusion():
    p = ModelParams(sigma=1e-300, theta=0.01)
    r = buy_and_hold_utility(0.4, 10.0, 50.0, p, EXP, McConfig(paths=2000, seed=1))
    exact = EXP(10.0 * math.exp(0.05) + 50.0 * math.exp(0.1) * (0.4 - 0.01 * 0.4))
    assert r.mean == pytest.approx(exact, rel=1e-14)
    assert r.se == 0.0


def test_linear_mean():
    p = ModelParams(theta=0.0)
    r = buy_and_hold_utility(0.5, 33.3, 50.0, p, LIN, McConfig(paths=200_000, seed=7))
    assert abs(r.mean - LOGNORMAL_MEAN) <= 4 * r.se


def test_reproducible():
    p = ModelParams()
    cfg = McConfig(paths=50_000, seed=42)
    a = buy_and_hold_utility(0.467, 33.3, 50.0, p, EXP, cfg)
    b = buy_and_hold_utility(0.467, 33.3, 50.0, p, EXP, cfg)
    assert a == b
    c = buy_and_hold_utility(0.467, 33.3, 50.0, p, EXP, McConfig(paths=50_000, seed=43))
    assert c.mean != a.mean


def test_antithetic_variance_reduction():
    p = ModelParams(theta=0.0)
    plain = buy_and_hold_utility(0.5, 1.0, 50.0, p, LIN, McConfig(paths=10_000, seed=3))
    anti = buy_and_hold_utility(0.5, 1.0, 50.0, p, LIN, McConfig(paths=10_000, seed=3, antithetic=True))
    assert plain.se / anti.se >= 1.5
    assert anti.samples == 5_000


def test_partial_last_batch():
    r = buy_and_hold_utility(0.5, 1.0, 50.0, ModelParams(), LIN, McConfig(paths=1001, seed=0, batch_size=256))
    assert r.samples == 1001


def test_domain_error():
    with pytest.raises(UtilityDomainError):
        buy_and_hold_utility(-0.5, 1.0, 50.0, ModelParams(), UtilityFunction.power(0.5),
                             McConfig(paths=1000, seed=0))


@pytest.mark.parametrize("kw", [dict(paths=0), dict(paths=1001, antithetic=True), dict(seed=-1),
                                dict(seed=2 ** 64), dict(batch_size=3)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        McConfig(**kw)
