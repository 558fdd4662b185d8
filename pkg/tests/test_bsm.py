import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from conftest import random_density, random_pure
from ippt.bsm import (
    BellOutcome,
    ShotRecord,
    VisibilityModel,
    apply_visibility,
    bell_distribution,
    estimate_from_record,
    estimate_ippt,
    estimator_weight,
    exact_estimate,
    outcome_codes,
    sample_shots,
    visibility_povm,
)
from ippt.detection import _pair_operator, ippt_value
from ippt.qmath import Bipartition, ket, projector, rng_stream
from ippt.states import EXPERIMENT_VISIBILITIES, paper_target_state, reference_state

BELL = np.array([[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]]) / math.sqrt(2)
MIDDLE = Bipartition(3, (1,), (0, 2))


def brute_force_distribution(rho, sigma, effects=None):
    """Oracle: <B_r|(rho x sigma)|B_r> with explicit per-pair projectors."""
    n = int(math.log2(rho.shape[0]))
    joint = np.kron(rho, sigma)
    probs = []
    for codes in outcome_codes(n):
        if effects is None:
            blocks = [projector(BELL[c]) for c in codes]
        else:
            blocks = [effects[i][c] for i, c in enumerate(codes)]
        probs.append(np.real(np.sum(joint * _pair_operator(blocks, n).T)))
    return np.array(probs)


def random_split(n, rng):
    perm = rng.permutation(n)
    cut = int(rng.integers(1, n))
    return Bipartition(n, tuple(sorted(perm[:cut])), tuple(sorted(perm[cut:])))


# outcome tables

def test_outcome_indexing():
    assert BellOutcome((0, 0, 0)).index == 0
    assert BellOutcome((1, 2)).index == 6
    np.testing.assert_array_equal(outcome_codes(2)[6], [1, 2])
    with pytest.raises(ValueError):
        BellOutcome((4,))


def test_single_pair_examples():
    zero = projector(ket("0"))
    np.testing.assert_allclose(bell_distribution(zero, zero), [0.5, 0.5, 0, 0], atol=1e-15)
    half = np.eye(2) / 2
    np.testing.assert_allclose(bell_distribution(half, half), [0.25] * 4, atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_distribution_matches_projectors(n, rng):
    for _ in range(5):
        rho = random_density(n, rng)
        sigma = random_density(n, rng) if n != 2 else projector(random_pure(n, rng))
        np.testing.assert_allclose(bell_distribution(rho, sigma), brute_force_distribution(rho, sigma),
                                   atol=1e-12)


def test_distribution_normalized(rng):
    for i in range(100):
        n = 1 + i % 4
        p = bell_distribution(random_density(n, rng), random_pure(n, rng))
        assert abs(p.sum() - 1) < 1e-10
        assert p.min() >= -1e-12


def test_distribution_limits():
    with pytest.raises(ValueError):
        bell_distribution(np.eye(4) / 4, np.eye(8) / 8)
    with pytest.raises(ValueError):
        bell_distribution(np.eye(128) / 128, np.eye(128) / 128)


# estimator

def test_weight_examples():
    bip = Bipartition(3, (0,), (1, 2))
    assert estimator_weight(BellOutcome((0, 0, 0)), bip) == 2
    assert estimator_weight((2, 0, 0), bip) == 0
    assert estimator_weight((0, 3, 0), bip) == -2
    assert estimator_weight((0, 3, 3), bip) == 2
    np.testing.assert_array_equal(estimator_weight(np.array([[0, 0, 0], [1, 0, 0]]), bip), [2, 0])
    with pytest.raises(ValueError):
        estimator_weight((0, 0), bip)


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_weight_support(n, seed):
    rng = np.random.default_rng(seed)
    bip = random_split(n, rng)
    w = estimator_weight(outcome_codes(n), bip)
    assert set(np.unique(w)) <= {0.0, 2.0**bip.n_a, -(2.0**bip.n_a)}


def test_unbiasedness_identity(rng):
    for i in range(100):
        n = 2 + i % 2
        bip = random_split(n, rng)
        rho = random_density(n, rng)
        sigma = random_density(n, rng) if i % 2 else random_pure(n, rng)
        assert abs(exact_estimate(bell_distribution(rho, sigma), bip) - ippt_value(rho, sigma, bip)) < 1e-10


def test_shot_estimate_on_target():
    mean, se = estimate_ippt(paper_target_state(), reference_state(math.pi), MIDDLE, 100_000, rng_stream(3))
    assert abs(mean - (-0.2)) < 5 * se


def test_single_shot_support():
    bip = Bipartition(3, (0, 1), (2,))
    for i in range(20):
        mean, se = estimate_ippt(paper_target_state(), reference_state(0.3), bip, 1, rng_stream(4, i))
        assert mean in (0.0, 4.0, -4.0)
        assert math.isinf(se)


def test_stderr_scaling(rng):
    rho, sigma = random_density(2, rng), random_pure(2, rng)
    bip = Bipartition(2, (0,), (1,))
    dist = bell_distribution(rho, sigma)
    errs = [estimate_from_record(sample_shots(dist, s, rng_stream(5, s)), bip)[1] for s in (1000, 10_000, 100_000)]
    for small, large in zip(errs, errs[1:]):
        assert abs(small / large / math.sqrt(10) - 1) < 0.2


# sampling

def test_degenerate_sampling():
    dist = np.zeros(16)
    dist[7] = 1
    rec = sample_shots(dist, 50, rng_stream(0))
    assert np.all(rec.codes == outcome_codes(2)[7])


def test_sampling_chi_square(rng):
    dist = bell_distribution(random_density(2, rng), random_density(2, rng))
    rec = sample_shots(dist, 100_000, rng_stream(6))
    counts = np.bincount(rec.codes[:, 0].astype(int) * 4 + rec.codes[:, 1], minlength=16)
    keep = dist > 0
    assert chisquare(counts[keep], 100_000 * dist[keep] / dist[keep].sum()).pvalue > 1e-3


def test_sampling_deterministic(rng):
    dist = bell_distribution(random_density(2, rng), random_density(2, rng))
    a = sample_shots(dist, 1000, rng_stream(8, 1))
    b = sample_shots(dist, 1000, rng_stream(8, 1))
    np.testing.assert_array_equal(a.codes, b.codes)


def test_sampling_rejects_bad_table():
    with pytest.raises(ValueError):
        sample_shots(np.full(16, 0.1), 10, rng_stream(0))
    with pytest.raises(ValueError):
        sample_shots(np.full(8, 1 / 8), 10, rng_stream(0))


# shot records

def test_shot_record_round_trips(tmp_path, rng):
    dist = bell_distribution(random_density(3, rng), random_density(3, rng))
    rec = sample_shots(dist, 200, rng_stream(9), seed=9)
    assert rec.shots == 200 and rec.n_pairs == 3
    assert len(rec.outcomes()) == rec.shots
    for suffix in (".csv", ".json"):
        rec.save(tmp_path / f"r{suffix}")
        back = ShotRecord.load(tmp_path / f"r{suffix}")
        np.testing.assert_array_equal(back.codes, rec.codes)
    assert rec.to_csv().splitlines()[0] == ",".join(map(str, rec.codes[0]))


def test_shot_record_rejects_bad_input():
    with pytest.raises(ValueError):
        ShotRecord.from_csv("0,1\n0,5\n")
    with pytest.raises(ValueError):
        ShotRecord.from_csv("0,1\n0\n")
    with pytest.raises(ValueError):
        ShotRecord.from_csv("# only a comment\n")
    with pytest.raises(ValueError):
        ShotRecord.from_json('{"shots": 3, "codes": [[0, 1]]}')


# visibility

def test_visibility_one_is_identity(rng):
    dist = bell_distribution(random_density(3, rng), random_density(3, rng))
    np.testing.assert_allclose(apply_visibility(dist, VisibilityModel((1, 1, 1))), dist, atol=1e-15)


def test_visibility_matches_povm_oracle(rng):
    vis = (0.3, 0.8, 0.55)
    rho, sigma = random_density(3, rng), random_density(3, rng)
    effects = [visibility_povm(v) for v in vis]
    for eff in effects:
        np.testing.assert_allclose(sum(eff), np.eye(4), atol=1e-15)
    expected = brute_force_distribution(rho, sigma, effects)
    got = apply_visibility(None, VisibilityModel(vis), rho, sigma)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_visibility_zero_equalizes_phi_pair():
    phi = projector((ket("00") + ket("11")) / math.sqrt(2))
    t = apply_visibility(bell_distribution(phi, phi), VisibilityModel((0, 0))).reshape(4, 4)
    np.testing.assert_allclose(t[0], t[1], atol=1e-15)
    np.testing.assert_allclose(t[:, 0], t[:, 1], atol=1e-15)
    np.testing.assert_allclose(t[2], t[3], atol=1e-15)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=2), st.integers(0, 2**32 - 1))
def test_visibility_outputs_are_distributions(vis, seed):
    rng = np.random.default_rng(seed)
    dist = bell_distribution(random_density(2, rng), random_density(2, rng))
    out = apply_visibility(dist, VisibilityModel(vis))
    assert out.min() >= -1e-15 and abs(out.sum() - 1) < 1e-10


def test_visibility_errors():
    with pytest.raises(ValueError):
        VisibilityModel((1.2,))
    with pytest.raises(ValueError):
        apply_visibility(np.full(16, 1 / 16), VisibilityModel((1, 1, 1)))
    with pytest.raises(ValueError):
        apply_visibility(None, VisibilityModel((1,)))


def sweep_amplitude(vis):
    rho = paper_target_state()
    d0 = apply_visibility(bell_distribution(rho, reference_state(0)), VisibilityModel(vis))
    dpi = apply_visibility(bell_distribution(rho, reference_state(math.pi)), VisibilityModel(vis))
    return (exact_estimate(d0, MIDDLE) - exact_estimate(dpi, MIDDLE)) / 2


def test_visibility_shrinks_amplitude_monotonically():
    base = list(EXPERIMENT_VISIBILITIES)
    amp = sweep_amplitude(base)
    assert 0 < amp < 0.2
    for i in range(3):
        for lower in (0.7, 0.5):
            vis = list(base)
            vis[i] = lower * base[i]
            assert sweep_amplitude(vis) < amp
