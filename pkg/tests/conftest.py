import numpy as np
import pytest

from gridlab import validate_params


@pytest.fixture
def p0():
    """The reference parameter set used throughout the examples."""
    return validate_params(0.5, 0.1, 1.0, 1.0, 3.0, 1.0)


def random_params(rng: np.random.Generator, mu_sign=None, mu_min_abs=0.01):
    """A random valid parameter set, optionally with a fixed mu sign."""
    while True:
        lam = rng.uniform(0.05, 0.9)
        if mu_sign == "positive":
            mu = rng.uniform(mu_min_abs, min(0.95 - lam, 0.9))
        elif mu_sign == "negative":
            mu = -rng.uniform(mu_min_abs, max(lam - 0.01, mu_min_abs))
        else:
            mu = rng.uniform(-0.5, 0.95 - lam)
            if abs(mu) < mu_min_abs:
                continue
        if lam + mu >= 0.95 or mu <= -0.9:
            continue
        zeta = rng.uniform(0.1, 3.0)
        xi = rng.uniform(0.1, 3.0)
        r_star = zeta + rng.uniform(0.1, 5.0)
        sigma = rng.uniform(0.1, 2.0)
        return validate_params(lam, mu, zeta, xi, r_star, sigma)


def random_state(rng: np.random.Generator, p, region=None):
    """A random state, optionally constrained to one region."""
    z = rng.uniform(0.0, 50.0)
    if region is None:
        r = rng.uniform(-50.0, p.r_star + p.xi + 50.0)
    elif region == "D1":
        r = rng.uniform(-50.0, -1e-9)
    elif region == "D2":
        r = rng.uniform(0.0, p.r_star - p.zeta)
    elif region == "D3":
        r = rng.uniform(p.r_star - p.zeta, p.r_star + p.xi)
    else:
        r = rng.uniform(p.r_star + p.xi, p.r_star + p.xi + 50.0)
    return (float(r), float(z))
