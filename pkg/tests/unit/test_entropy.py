"""
Entropy coding tests: CDF quantization, the range coder, likelihood models
and coding tables.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.entropy import (
    LATENT_BOUND,
    PROB_FLOOR,
    SIGMA_FLOOR,
    TOTAL,
    CdfTable,
    FactorizedModel,
    RangeDecoder,
    RangeEncoder,
    ScaleTable,
    ScaleTableCache,
    decode_values,
    encode_values,
    factorized_likelihood,
    factorized_tables,
    gather_params,
    gaussian_bin_likelihood,
    gaussian_tables,
    quantize_cdf,
    quantize_frequencies,
    quantize_latent,
    rate_estimate,
    rc_decode,
    rc_encode,
    soft_floor,
    split_gather_output,
    uniform_table,
)
from src.networks import Role, build_network, zero_params
from src.tensor import DTYPE
from src.utils.errors import ConfigError, EntropyCodingError, ShapeError


class TestCdf:
    """Frequency quantization"""

    def test_uniform_four(self):
        assert quantize_cdf(np.full(4, 0.25)).frequencies().tolist() == [16384] * 4

    def test_zero_bin_repaired(self):
        freq = quantize_frequencies(np.array([0.5, 0.0, 0.5]))
        assert freq[1] == 1 and freq.sum() == TOTAL

    def test_strictly_increasing(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pmf = rng.dirichlet(np.full(rng.integers(2, 300), 0.1))
            table = quantize_cdf(pmf)
            assert np.all(np.diff(table.cdf) >= 1)
            assert table.cdf[0] == 0 and table.cdf[-1] == TOTAL

    def test_batched_rows(self):
        pmfs = np.array([[0.9, 0.1, 0.0], [1 / 3, 1 / 3, 1 / 3]])
        freq = quantize_frequencies(pmfs)
        assert freq.shape == (2, 3)
        assert np.all(freq.sum(axis=-1) == TOTAL) and np.all(freq >= 1)

    def test_invalid_pmf(self):
        with pytest.raises(EntropyCodingError):
            quantize_frequencies(np.array([0.7, 0.7]))
        with pytest.raises(EntropyCodingError):
            quantize_frequencies(np.array([-0.1, 1.0]))

    def test_table_validation(self):
        with pytest.raises(EntropyCodingError):
            CdfTable(np.array([0, 10, 10, TOTAL]))
        with pytest.raises(EntropyCodingError):
            CdfTable(np.array([0, 100]))

    def test_only_sixteen_bit_precision(self):
        with pytest.raises(EntropyCodingError):
            quantize_cdf(np.full(2, 0.5), precision=12)


class TestRangeCoder:
    """Encoder/decoder contract"""

    def test_empty_stream_is_flush_only(self):
        assert len(rc_encode([], [])) <= 32
        assert rc_decode(b"", [], 0) == []

    def test_uniform_rate(self):
        rng = np.random.default_rng(1)
        table = uniform_table(256)
        data = rc_encode(rng.integers(0, 256, 1000).tolist(), [table] * 1000)
        assert abs(len(data) - 1000) <= 20

    def test_certain_symbol_costs_nothing(self):
        table = CdfTable(np.array([0, TOTAL]))
        assert len(rc_encode([0] * 10_000, [table] * 10_000)) <= 40

    def test_round_trip_random_tables(self):
        rng = np.random.default_rng(2)
        tables, symbols = [], []
        for _ in range(3000):
            size = int(rng.integers(1, 40))
            table = quantize_cdf(rng.dirichlet(np.full(size, 0.3)), offset=int(rng.integers(-10, 10)))
            tables.append(table)
            symbols.append(table.offset + int(rng.integers(0, size)))
        data = rc_encode(symbols, tables)
        assert rc_decode(data, tables, len(symbols)) == symbols

    def test_long_round_trip(self):
        rng = np.random.default_rng(7)
        pool = [quantize_cdf(rng.dirichlet(np.full(int(rng.integers(2, 64)), 0.5))) for _ in range(64)]
        count = 100_000
        tables = [pool[i] for i in rng.integers(0, len(pool), count)]
        symbols = [int(rng.integers(0, table.num_symbols)) for table in tables]
        data = rc_encode(symbols, tables)
        assert rc_decode(data, tables, count) == symbols

    def test_skewed_round_trip(self):
        table = quantize_cdf(np.array([1 - 1e-4, 5e-5, 5e-5]))
        symbols = [0] * 5000 + [1, 2] * 10 + [0] * 5000
        data = rc_encode(symbols, [table] * len(symbols))
        assert rc_decode(data, [table] * len(symbols), len(symbols)) == symbols

    def test_out_of_support_symbol(self):
        with pytest.raises(EntropyCodingError):
            rc_encode([5], [uniform_table(4)])

    def test_exhausted_stream(self):
        table = uniform_table(256)
        data = rc_encode(list(range(10)), [table] * 10)
        with pytest.raises(EntropyCodingError):
            rc_decode(data, [table] * 100, 100)

    def test_decoder_consumes_whole_stream(self):
        table = uniform_table(7)
        symbols = [i % 7 for i in range(500)]
        data = rc_encode(symbols, [table] * 500)
        decoder = RangeDecoder(data)
        assert [decoder.decode(table) for _ in symbols] == symbols
        assert decoder.bytes_consumed == len(data)

    def test_finish_is_idempotent(self):
        encoder = RangeEncoder()
        encoder.encode(1, uniform_table(3))
        assert encoder.finish() == encoder.finish()


class TestQuantization:
    """Rounding and noise relaxation"""

    def test_round_half_to_even(self):
        x = torch.tensor([1.4, -1.5, 2.5, 0.5], dtype=DTYPE)
        assert quantize_latent(x, "round").tolist() == [1.0, -2.0, 2.0, 0.0]

    def test_noise_deterministic(self):
        x = torch.randn(4, 4, 3, dtype=DTYPE)
        assert torch.equal(quantize_latent(x, "noise", seed=5), quantize_latent(x, "noise", seed=5))
        assert not torch.equal(quantize_latent(x, "noise", seed=5), quantize_latent(x, "noise", seed=6))

    def test_noise_bounded(self):
        x = torch.randn(64, 64, 2, dtype=DTYPE)
        assert torch.all((quantize_latent(x, "noise", seed=0) - x).abs() <= 0.5)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            quantize_latent(torch.zeros(1, dtype=DTYPE), "dither")


class TestGaussianLikelihood:
    """Discretized Gaussian bins"""

    def test_centre_bin(self):
        assert gaussian_bin_likelihood(0, 0.0, 1.0).item() == pytest.approx(0.3829249, abs=1e-6)

    def test_spreading(self):
        sigmas = [1.0, 4.0, 16.0, 64.0, 256.0]
        probs = [gaussian_bin_likelihood(3, 3.0, s).item() for s in sigmas]
        assert all(a > b for a, b in zip(probs, probs[1:]))
        assert probs[-1] == pytest.approx(1.0 / (256.0 * np.sqrt(2 * np.pi)), rel=1e-3)

    def test_normalization(self):
        v = torch.arange(-1000, 1001, dtype=DTYPE)
        probs = gaussian_bin_likelihood(v, 0.0, 2.0)
        # far-tail bins sit just above the floor; the rest carry the mass
        assert probs[probs > 2 * PROB_FLOOR].sum().item() == pytest.approx(1.0, abs=1e-4)
        assert torch.all(probs > PROB_FLOOR)
        assert torch.all(probs[v.abs() > 40] < 1.5 * PROB_FLOOR)

    def test_sigma_floor_enforced(self):
        with pytest.raises(ShapeError):
            gaussian_bin_likelihood(0, 0.0, SIGMA_FLOOR / 2)


class TestGather:
    """Gather output split into mixture parameters"""

    def test_zero_network(self):
        n = 4
        spec = build_network(Role.GATHER, n)
        field = gather_params(
            torch.randn(3, 3, 2 * n, dtype=DTYPE), torch.randn(3, 3, 2 * n, dtype=DTYPE), spec, zero_params(spec)
        )
        assert torch.count_nonzero(field.mu) == 0
        assert torch.allclose(field.sigma, torch.full_like(field.sigma, np.log(2.0)))
        assert torch.all(field.weights == 1.0)

    def test_channel_count(self):
        assert build_network(Role.GATHER, 64).out_channels == 192

    def test_mixture_weights_normalized(self):
        field = split_gather_output(torch.randn(5, 5, 3 * 3 * 4, dtype=DTYPE), 4, mixtures=3)
        assert field.mu.shape == (5, 5, 4, 3)
        assert torch.allclose(field.weights.sum(-1), torch.ones(5, 5, 4, dtype=DTYPE))
        assert torch.all(field.sigma >= SIGMA_FLOOR)

    def test_wrong_width(self):
        with pytest.raises(ShapeError):
            split_gather_output(torch.zeros(2, 2, 10, dtype=DTYPE), 4)

    def test_spatial_mismatch(self):
        spec = build_network(Role.GATHER, 2)
        with pytest.raises(ShapeError):
            gather_params(torch.zeros(2, 2, 4, dtype=DTYPE), torch.zeros(2, 3, 4, dtype=DTYPE), spec, zero_params(spec))


class TestSoftFloor:
    """Smooth lower bound used for probabilities and scales"""

    def test_above_floor(self):
        x = torch.tensor([-1e-4, 0.0, PROB_FLOOR, 1e-9], dtype=DTYPE)
        assert torch.all(soft_floor(x, PROB_FLOOR) > PROB_FLOOR)

    def test_identity_far_above(self):
        x = torch.tensor([0.01, 0.5, 1.0], dtype=DTYPE)
        assert torch.allclose(soft_floor(x, PROB_FLOOR), x, rtol=1e-12, atol=0)
        assert soft_floor(torch.tensor(1.0, dtype=DTYPE), SIGMA_FLOOR).item() == pytest.approx(1.0, rel=1e-9)

    def test_monotone(self):
        x = torch.linspace(-0.1, 0.1, 2001, dtype=DTYPE)
        y = soft_floor(x, SIGMA_FLOOR)
        assert torch.all(y[1:] > y[:-1])


class TestFactorizedModel:
    """Hyper-latent prior"""

    def test_uniform_initialization(self):
        model = FactorizedModel(3, support=16)
        assert factorized_likelihood(0, model, 1) == pytest.approx(1 / 33)
        assert factorized_likelihood(-16, model, 2) == pytest.approx(1 / 33)

    def test_sums_to_one(self):
        model = FactorizedModel(2, support=8, logits=torch.randn(2, 17, dtype=DTYPE))
        x = torch.arange(-8, 9, dtype=DTYPE)[:, None].repeat(1, 2)
        assert torch.allclose(model.likelihood(x).sum(0), torch.ones(2, dtype=DTYPE))

    def test_knots_monotone(self):
        model = FactorizedModel(4, support=5, logits=torch.randn(4, 11, dtype=DTYPE))
        knots = model.knots()
        assert torch.all(knots[:, 1:] >= knots[:, :-1])
        assert torch.allclose(knots[:, -1], torch.ones(4, dtype=DTYPE))

    def test_relaxed_likelihood_differentiable(self):
        model = FactorizedModel(2, support=4, logits=torch.randn(2, 9, dtype=DTYPE)).requires_grad_()
        x = torch.tensor([[0.3, -1.2]], dtype=DTYPE)
        model.likelihood(x).log().sum().backward()
        assert torch.isfinite(model.logits.grad).all() and model.logits.grad.abs().sum() > 0

    def _derivative(self, model, x0):
        x = torch.tensor([[x0, 0.0]], dtype=DTYPE, requires_grad=True)
        model.likelihood(x)[0, 0].backward()
        return x.grad[0, 0].item()

    def _value(self, model, x0):
        return model.likelihood(torch.tensor([[x0, 0.0]], dtype=DTYPE))[0, 0].item()

    def test_smooth_across_knots(self):
        torch.manual_seed(5)
        model = FactorizedModel(2, support=4, logits=torch.randn(2, 9, dtype=DTYPE))
        for knot in (-2.0, 0.0, 1.0, 3.0):
            left = self._derivative(model, knot - 1e-6)
            right = self._derivative(model, knot + 1e-6)
            assert abs(left - right) < 1e-9

    def test_finite_difference_straddling_knot(self):
        torch.manual_seed(6)
        model = FactorizedModel(2, support=4, logits=torch.randn(2, 9, dtype=DTYPE))
        eps = 1e-4
        for x0 in (1.00003, -0.99998, 0.4, 2.7):
            numeric = (self._value(model, x0 + eps) - self._value(model, x0 - eps)) / (2 * eps)
            assert numeric == pytest.approx(self._derivative(model, x0), abs=1e-6)

    def test_save_load(self, tmp_path):
        model = FactorizedModel(3, support=4, logits=torch.randn(3, 9, dtype=DTYPE).float().to(DTYPE))
        model.save(tmp_path / "prior.bin")
        loaded = FactorizedModel.load(tmp_path / "prior.bin", 3)
        assert torch.equal(loaded.logits, model.logits)


class TestRateEstimate:
    """Bit estimates from table probabilities"""

    def test_uniform(self):
        assert rate_estimate(torch.zeros(1000), [1 / 256] * 1000) == pytest.approx(8000.0)

    def test_certain(self):
        assert rate_estimate(torch.zeros(10), [1.0] * 10) == 0.0

    def test_invalid_probabilities(self):
        with pytest.raises(ShapeError):
            rate_estimate(torch.zeros(2), [0.5, 0.0])
        with pytest.raises(ShapeError):
            rate_estimate(torch.zeros(3), [0.5, 0.5])


class TestCodingTables:
    """Windowed Gaussian tables with escape"""

    def _code(self, values, tables):
        encoder = RangeEncoder()
        probs = encode_values(encoder, values, tables)
        data = encoder.finish()
        return data, probs, decode_values(RangeDecoder(data), tables)

    def test_gaussian_round_trip_with_escapes(self):
        rng = np.random.default_rng(3)
        count = 400
        mu = rng.normal(0, 3, count)
        sigma = rng.uniform(0.1, 5, count)
        values = np.rint(mu + sigma * rng.normal(0, 1, count)).astype(np.int64)
        values[::50] = rng.integers(-LATENT_BOUND, LATENT_BOUND + 1, values[::50].size)
        tables = gaussian_tables(mu, sigma, np.ones(count))
        data, probs, decoded = self._code(values, tables)
        assert np.array_equal(decoded, values)
        assert len(probs) >= count

    def test_estimate_matches_actual(self):
        rng = np.random.default_rng(4)
        count = 10_000
        mu = rng.normal(0, 2, count)
        sigma = rng.uniform(0.5, 8, count)
        values = np.rint(mu + sigma * rng.normal(0, 1, count)).astype(np.int64)
        tables = gaussian_tables(mu, sigma, np.ones(count))
        data, probs, _ = self._code(values, tables)
        estimate = rate_estimate(torch.as_tensor(values), probs)
        assert abs(8 * len(data) - estimate) <= 0.01 * estimate + 8 * 32

    def test_mixture_tables(self):
        mu = np.array([[-3.0, 4.0], [0.0, 0.5]])
        sigma = np.array([[1.0, 1.0], [2.0, 0.2]])
        weights = np.array([[0.5, 0.5], [0.1, 0.9]])
        values = np.array([4, 0])
        _, _, decoded = self._code(values, gaussian_tables(mu, sigma, weights))
        assert decoded.tolist() == [4, 0]

    def test_factorized_tables(self):
        model = FactorizedModel(4, support=6)
        tables = factorized_tables(model)
        values = np.array([0, -6, 6, 100])
        _, probs, decoded = self._code(values, tables)
        assert decoded.tolist() == values.tolist()
        assert len(probs) == 5

    def test_scale_table_cache(self):
        cache = ScaleTableCache()
        mu = np.array([10.2, -3.7, 0.0])
        sigma = np.array([0.5, 3.0, 300.0])
        values = np.array([10, -9, 255])
        _, _, decoded = self._code(values, cache.tables(mu, sigma))
        assert decoded.tolist() == values.tolist()

    def test_scale_table_cache_single_component(self):
        cache = ScaleTableCache()
        assert len(cache.tables(np.zeros((3, 1)), np.ones((3, 1)))) == 3
        with pytest.raises(EntropyCodingError):
            cache.tables(np.zeros((3, 2)), np.ones((3, 2)))
        with pytest.raises(EntropyCodingError):
            cache.tables(np.zeros(3), np.ones(4))

    def test_scale_table_levels(self):
        table = ScaleTable()
        assert len(table) == 64
        assert np.all(np.diff(table.levels) > 0)
        assert table.levels[0] == pytest.approx(0.11) and table.levels[-1] == pytest.approx(256.0)
        assert table.snap(1.0) >= 1.0
        assert table.index(1000.0) == 63

    def test_value_outside_latent_range(self):
        tables = gaussian_tables(np.zeros(1), np.ones(1), np.ones(1))
        with pytest.raises(EntropyCodingError):
            encode_values(RangeEncoder(), np.array([LATENT_BOUND + 1]), tables)
