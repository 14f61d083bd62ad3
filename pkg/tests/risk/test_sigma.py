from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from riskmdp.errors import RiskMeasureError
from riskmdp.mdp import DiscreteDistribution
from riskmdp.risk import (
    RiskMeasure,
    cvar_sigma,
    evar_sigma,
    expectation_sigma,
    sigma,
    sigma_batch,
)

TAIL = DiscreteDistribution(support=np.array([0, 1]), probabilities=np.array([0.9, 0.1]))
TAIL_VALUES = np.array([0.0, 10.0])


def _uniform(n: int) -> DiscreteDistribution:
    return DiscreteDistribution(support=np.arange(n), probabilities=np.full(n, 1.0 / n))


def _cvar_oracle(v: np.ndarray, p: np.ndarray, eps: float) -> float:
    return min(z + np.sum(p * np.maximum(v - z, 0.0)) / eps for z in v)


def _evar_oracle(v: np.ndarray, p: np.ndarray, eps: float) -> float:
    zetas = np.logspace(-4, 4, 40001)
    shifted = v.max()
    mgf = np.log(np.exp(np.outer(zetas, v - shifted)) @ p)
    return shifted + float(np.min((mgf + np.log(1.0 / eps)) / zetas))


class TestExamples:
    def test_expectation(self):
        result = expectation_sigma([1.0, 3.0], _uniform(2))
        assert result.value == pytest.approx(2.0)
        assert result.zeta_star is None

    @pytest.mark.parametrize(
        "measure",
        [RiskMeasure.expectation(), RiskMeasure.cvar(0.3), RiskMeasure.evar(0.3)],
    )
    def test_point_mass(self, measure):
        assert sigma(measure, [7.0], DiscreteDistribution.point_mass(0)).value == pytest.approx(7.0)

    def test_tail_expectation(self):
        assert expectation_sigma(TAIL_VALUES, TAIL).value == pytest.approx(1.0)

    def test_tail_cvar(self):
        assert cvar_sigma(TAIL_VALUES, TAIL, 0.1).value == pytest.approx(10.0)
        result = cvar_sigma(TAIL_VALUES, TAIL, 0.2)
        assert result.value == pytest.approx(5.0)
        assert_allclose(result.subgradient, [0.5, 0.5])

    def test_tail_evar(self):
        evar = evar_sigma(TAIL_VALUES, TAIL, 0.15).value
        assert cvar_sigma(TAIL_VALUES, TAIL, 0.15).value <= evar + 1e-12
        assert evar <= 10.0 + 1e-12
        assert evar == pytest.approx(_evar_oracle(TAIL_VALUES, TAIL.probabilities, 0.15), abs=1e-6)

    def test_evar_small_epsilon_reaches_max(self):
        assert evar_sigma(TAIL_VALUES, TAIL, 1e-6).value == pytest.approx(10.0, abs=1e-3)

    @pytest.mark.parametrize("fn", [cvar_sigma, evar_sigma])
    def test_epsilon_one_is_expectation(self, fn):
        values = np.array([0.5, 4.0, 2.0])
        assert fn(values, _uniform(3), 1.0).value == pytest.approx(values.mean())

    @pytest.mark.parametrize("fn", [cvar_sigma, evar_sigma])
    @pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
    def test_rejects_epsilon(self, fn, eps):
        with pytest.raises(RiskMeasureError):
            fn(TAIL_VALUES, TAIL, eps)

    def test_rejects_length_mismatch(self):
        with pytest.raises(RiskMeasureError):
            expectation_sigma([1.0, 2.0, 3.0], TAIL)

    def test_rejects_non_finite_values(self):
        with pytest.raises(RiskMeasureError):
            cvar_sigma([0.0, np.inf], TAIL, 0.5)

    def test_shift_stability(self):
        base = evar_sigma(TAIL_VALUES, TAIL, 0.15).value
        shifted = evar_sigma(TAIL_VALUES + 1e6, TAIL, 0.15).value
        assert shifted - 1e6 == pytest.approx(base, abs=1e-5)


class TestOracles:
    @pytest.mark.parametrize("eps", [0.05, 0.15, 0.5, 0.9])
    def test_cvar_matches_rockafellar_minimum(self, rng, eps):
        for _ in range(50):
            v = rng.uniform(0.0, 10.0, 6)
            p = rng.dirichlet(np.ones(6))
            dist = DiscreteDistribution(support=np.arange(6), probabilities=p)
            assert cvar_sigma(v, dist, eps).value == pytest.approx(_cvar_oracle(v, p, eps), abs=1e-10)

    @pytest.mark.parametrize("eps", [0.15, 0.5])
    def test_evar_matches_grid_minimum(self, rng, eps):
        checked = 0
        for _ in range(40):
            v = rng.uniform(0.0, 10.0, 5)
            p = rng.dirichlet(np.ones(5))
            if p[np.argmax(v)] > eps - 0.05:
                continue
            dist = DiscreteDistribution(support=np.arange(5), probabilities=p)
            value = evar_sigma(v, dist, eps).value
            oracle = _evar_oracle(v, p, eps)
            assert value <= oracle + 1e-9
            assert value == pytest.approx(oracle, abs=1e-4)
            checked += 1
        assert checked > 0


def _padded_rows(rng, n_rows: int = 1200, width: int = 5):
    sizes = rng.integers(1, width + 1, n_rows)
    probs = np.zeros((n_rows, width))
    for r, k in enumerate(sizes):
        probs[r, :k] = rng.dirichlet(np.ones(k))
    values = rng.uniform(-5.0, 15.0, (n_rows, width))
    return values, probs


def _p_top(values, probs):
    masked = np.where(probs > 0.0, values, -np.inf)
    top = masked == masked.max(axis=1, keepdims=True)
    return np.where(top, probs, 0.0).sum(axis=1)


def _well_posed(eps, *pairs):
    keep = True
    for values, probs in pairs:
        keep = keep & (np.abs(eps - _p_top(values, probs)) >= 0.01)
    return keep


MEASURES = [
    RiskMeasure.expectation(),
    RiskMeasure.cvar(0.05),
    RiskMeasure.cvar(0.15),
    RiskMeasure.cvar(0.6),
    RiskMeasure.evar(0.05),
    RiskMeasure.evar(0.15),
    RiskMeasure.evar(0.6),
]


@pytest.mark.parametrize("measure", MEASURES, ids=lambda m: m.label)
class TestCoherence:
    def _keep(self, measure, *pairs):
        if measure.kind.value != "evar":
            return np.ones(pairs[0][0].shape[0], dtype=bool)
        return _well_posed(measure.epsilon, *pairs)

    def test_monotone(self, rng, measure):
        v, p = _padded_rows(rng)
        w = v + rng.uniform(0.0, 3.0, v.shape)
        keep = self._keep(measure, (v, p), (w, p))
        lo = sigma_batch(measure, v, p).values
        hi = sigma_batch(measure, w, p).values
        assert np.all(lo[keep] <= hi[keep] + 1e-8 * (1.0 + np.abs(hi[keep])))

    def test_translation(self, rng, measure):
        v, p = _padded_rows(rng)
        c = rng.uniform(-20.0, 20.0, (v.shape[0], 1))
        keep = self._keep(measure, (v, p))
        base = sigma_batch(measure, v, p).values
        moved = sigma_batch(measure, v + c, p).values
        assert_allclose(moved[keep], base[keep] + c[keep, 0], rtol=1e-8, atol=1e-8)

    def test_positive_homogeneity(self, rng, measure):
        v, p = _padded_rows(rng)
        t = rng.uniform(0.5, 2.0, (v.shape[0], 1))
        keep = self._keep(measure, (v, p))
        base = sigma_batch(measure, v, p).values
        scaled = sigma_batch(measure, t * v, p).values
        assert_allclose(scaled[keep], t[keep, 0] * base[keep], rtol=1e-8, atol=1e-8)

    def test_subadditive(self, rng, measure):
        v, p = _padded_rows(rng)
        w, _ = _padded_rows(rng)
        keep = self._keep(measure, (v, p), (w, p), (v + w, p))
        total = sigma_batch(measure, v + w, p).values
        parts = sigma_batch(measure, v, p).values + sigma_batch(measure, w, p).values
        assert np.all(total[keep] <= parts[keep] + 1e-8 * (1.0 + np.abs(parts[keep])))

    def test_bounded_by_support(self, rng, measure):
        v, p = _padded_rows(rng)
        values = sigma_batch(measure, v, p).values
        mask = p > 0.0
        hi = np.where(mask, v, -np.inf).max(axis=1)
        mean = (p * v).sum(axis=1)
        assert np.all(values <= hi + 1e-9)
        assert np.all(values >= mean - 1e-9)

    def test_subgradient_supports_sigma(self, rng, measure):
        v, p = _padded_rows(rng, n_rows=60)
        keep = self._keep(measure, (v, p))
        batch = sigma_batch(measure, v, p)
        assert_allclose(batch.weights.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(batch.weights[p == 0.0] == 0.0)
        exact = (batch.weights * v).sum(axis=1)
        assert_allclose(exact[keep], batch.values[keep], rtol=1e-7, atol=1e-7)
        for _ in range(100):
            w = rng.uniform(-10.0, 20.0, v.shape)
            lhs = sigma_batch(measure, w, p).values
            rhs = (batch.weights * w).sum(axis=1)
            assert np.all(lhs[keep] >= rhs[keep] - 1e-7)


def test_risk_ordering(rng):
    v, p = _padded_rows(rng, n_rows=300)
    for eps in (0.05, 0.15, 0.5):
        expectation = sigma_batch(RiskMeasure.expectation(), v, p).values
        cvar = sigma_batch(RiskMeasure.cvar(eps), v, p).values
        evar = sigma_batch(RiskMeasure.evar(eps), v, p).values
        assert np.all(expectation <= cvar + 1e-9)
        assert np.all(cvar <= evar + 1e-7)


def test_cvar_decreases_in_epsilon(rng):
    v, p = _padded_rows(rng, n_rows=300)
    previous = sigma_batch(RiskMeasure.cvar(0.01), v, p).values
    for eps in (0.05, 0.2, 0.5, 1.0):
        current = sigma_batch(RiskMeasure.cvar(eps), v, p).values
        assert np.all(current <= previous + 1e-9)
        previous = current
