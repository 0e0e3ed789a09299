import numpy as np
import pytest

from matchnet import DIRAC_ZERO, ModelSpec, NoiseSpec, abs_tail, u_kappa, u_kappa_single
from matchnet.errors import InputError
from matchnet.noise import sample
from matchnet.rng import stream


def test_spec_validation():
    with pytest.raises(InputError):
        NoiseSpec.uniform(1.0, -1.0)
    with pytest.raises(InputError):
        NoiseSpec("gauss")
    with pytest.raises(InputError):
        NoiseSpec.dirac(float("inf"))


def test_bounds():
    assert NoiseSpec.dirac(-2.0).bound == 2.0
    assert NoiseSpec.uniform(-1.0, 3.0).bound == 3.0
    assert DIRAC_ZERO.bound == 0.0


def test_sampling_dirac_and_degenerate():
    rng = stream(1)
    assert sample(DIRAC_ZERO, rng) == 0.0
    assert sample(NoiseSpec.uniform(2.0, 2.0), rng) == 2.0


def test_sampling_uniform_moments():
    rng = stream(2)
    ns = NoiseSpec.uniform(-1.0, 1.0)
    draws = np.array([sample(ns, rng) for _ in range(200_000)])
    big = rng.uniform(-1.0, 1.0, 800_000)
    draws = np.concatenate([draws, big])  # one million total
    assert abs(draws.mean()) < 5e-3
    assert draws.min() >= -1.0 and draws.max() <= 1.0


def test_abs_tail_examples():
    assert abs_tail(DIRAC_ZERO, 0.0) == 0.0
    assert abs_tail(NoiseSpec.uniform(-1, 1), 0.25) == pytest.approx(0.75)
    assert abs_tail(NoiseSpec.uniform(-1, 1), 2.0) == 0.0
    assert abs_tail(NoiseSpec.dirac(2.0), 1.9) == 1.0
    assert abs_tail(NoiseSpec.dirac(2.0), 2.0) == 0.0
    # asymmetric support
    ns = NoiseSpec.uniform(-0.5, 1.5)
    assert abs_tail(ns, 0.0) == pytest.approx(1.0)
    assert abs_tail(ns, 0.5) == pytest.approx(0.5)
    assert abs_tail(ns, 1.0) == pytest.approx(0.25)
    with pytest.raises(InputError):
        abs_tail(ns, -0.1)


def test_abs_tail_monotone_right_continuous():
    for ns in (NoiseSpec.uniform(-1, 1), NoiseSpec.uniform(-0.3, 2.0), NoiseSpec.dirac(1.5)):
        grid = np.linspace(0.0, 2.5, 600)
        vals = [abs_tail(ns, u) for u in grid]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        for u in (0.0, 0.5, 1.0, 1.5, 2.0):
            right = abs_tail(ns, u + 1e-12)
            assert abs_tail(ns, u) == pytest.approx(right, abs=1e-9)


def test_u_kappa_single_closed_forms():
    assert u_kappa_single(DIRAC_ZERO, 0.5, 3.0, 3) == 0.0
    tau = 1.0 - (1.0 - 0.5 / 3.0) ** (1.0 / 6.0)
    got = u_kappa_single(NoiseSpec.uniform(-1, 1), 0.5, 3.0, 3)
    assert got == pytest.approx(1.0 - tau, abs=1e-12)
    assert u_kappa_single(NoiseSpec.dirac(2.0), 1.0, 3.0, 3) == 2.0


def test_u_kappa_single_bisection_matches_symmetric_closed_form():
    # run the asymmetric path on a symmetric-by-value interval
    ns_shifted = NoiseSpec.uniform(-1.0, 1.0 + 1e-15)
    tau = 1.0 - (1.0 - 0.5 / 3.0) ** (1.0 / 6.0)
    got = u_kappa_single(ns_shifted, 0.5, 3.0, 3)
    assert got == pytest.approx(1.0 - tau, abs=1e-6)
    # genuinely asymmetric: solve P(|U| > u) = tau by hand for U ~ Unif[-1, 3]
    ns = NoiseSpec.uniform(-1.0, 3.0)
    got = u_kappa_single(ns, 0.5, 3.0, 3)
    # for u in [1, 3]: tail = (3 - u) / 4
    expected = 3.0 - 4.0 * tau
    assert got == pytest.approx(expected, abs=1e-6)


def test_u_kappa_single_rejects_bad_kappa():
    with pytest.raises(InputError):
        u_kappa_single(DIRAC_ZERO, 0.0, 3.0, 3)
    with pytest.raises(InputError):
        u_kappa_single(DIRAC_ZERO, 3.0, 3.0, 3)
    with pytest.raises(InputError):
        u_kappa_single(DIRAC_ZERO, 0.5, 3.0, 0)


def test_u_kappa_single_monotone_in_kappa():
    ns = NoiseSpec.uniform(-2.0, 2.0)
    values = [u_kappa_single(ns, kappa, 5.0, 4) for kappa in np.linspace(0.1, 4.9, 25)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_u_kappa_model_level(k3):
    spec = ModelSpec.create(k3, [1, 1, 1], noise=NoiseSpec.uniform(-1, 1))
    tau = 1.0 - (1.0 - 0.5 / 3.0) ** (1.0 / 6.0)
    assert u_kappa(spec, 0.5) == pytest.approx(1.0 - tau, abs=1e-12)
    assert u_kappa(ModelSpec.create(k3, [1, 1, 1]), 0.5) == 0.0
    mixed = {(j, i): DIRAC_ZERO for (j, i) in ModelSpec.create(k3, [1, 1, 1]).noise}
    mixed[(0, 1)] = NoiseSpec.uniform(-1, 1)
    spec_mixed = ModelSpec.create(k3, [1, 1, 1], noise=mixed)
    assert u_kappa(spec_mixed, 0.5) == pytest.approx(1.0 - tau, abs=1e-12)


def test_simultaneous_smallness_certificate(k3):
    # fraction of rounds with every per-pair error below u_kappa must reach
    # the design level 1 - kappa/lam(V) up to Monte Carlo error
    rng = stream(404)
    for kappa, noise in ((0.5, NoiseSpec.uniform(-1, 1)), (1.2, NoiseSpec.uniform(-0.5, 2.0))):
        spec = ModelSpec.create(k3, [1, 1, 1], noise=noise)
        u_k = u_kappa(spec, kappa)
        m = 200_000
        draws = rng.uniform(noise.a, noise.b, size=(m, 6))
        hit = np.all(np.abs(draws) <= u_k, axis=1)
        phat = hit.mean()
        target = 1.0 - kappa / 3.0
        sigma = np.sqrt(max(phat * (1 - phat), 1e-12) / m)
        assert phat >= target - 3.0 * sigma
