import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exch_pairs.data_io import dataset_manifest
from exch_pairs.errors import DegenerateExampleError, InvalidArgumentError
from exch_pairs.generator import (GenConfig, MechanismKind, MechanismParams, all_cells,
                                  assemble_dataset, build_example, draw_samples,
                                  fit_size_model, generate_example, noisify, parse_cells)
from exch_pairs.generator.mechanisms import sample_mechanism_params
from exch_pairs.metrics import hoeffding_d
from exch_pairs.priors import PriorKind
from exch_pairs.types import Direction

K = MechanismKind
U = PriorKind.Uniform


def _config(kind, **kw):
    return GenConfig(U, PriorKind.Normal, kind, **kw)


def test_powerlaw_identity_without_noise():
    cfg = _config(K.PowerLaw, sigma_x=0.0, sigma_y=0.0, n_samples=300)
    draws = draw_samples(cfg, np.random.default_rng(1))
    ex = build_example(cfg, MechanismParams(K.PowerLaw, mu_psi=1.0, sigma_psi=0.0), draws)
    assert np.max(np.abs(ex.ys - ex.xs)) < 1e-12
    assert ex.label is Direction.XtoY


def test_linear_constant_effect_is_degenerate():
    cfg = _config(K.Linear, sigma_x=0.0, sigma_y=0.0, n_samples=50)
    draws = draw_samples(cfg, np.random.default_rng(1))
    params = MechanismParams(K.Linear, mu0=0.3, mu1=0.3, sigma0=0.0, sigma1=0.0)
    with pytest.raises(DegenerateExampleError):
        build_example(cfg, params, draws)


def test_constant_cause_is_degenerate():
    cfg = GenConfig(U, U, K.Linear, sigma_x=0.0, sigma_y=0.0, n_samples=5)
    draws = draw_samples(cfg, np.random.default_rng(0))
    draws.theta_raw[:] = 1.0
    with pytest.raises(DegenerateExampleError):
        build_example(cfg, MechanismParams(K.Linear), draws)


@pytest.mark.parametrize("kind", list(MechanismKind))
def test_generate_deterministic_and_scaled(kind):
    cfg = _config(kind, n_samples=200, seed=42)
    a, b = generate_example(cfg), generate_example(cfg)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
    assert a.meta.params == b.meta.params
    for v in (a.xs, a.ys):
        assert v.min() == 0.0 and v.max() == 1.0 and len(v) == 200


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(MechanismKind)),
       st.sampled_from(list(PriorKind)), st.sampled_from(list(PriorKind)))
def test_permutation_equivariance(seed, kind, pt, pp):
    cfg = GenConfig(pt, pp, kind, n_samples=40)
    rng = np.random.default_rng(seed)
    draws = draw_samples(cfg, rng)
    params = sample_mechanism_params(kind, cfg.hyper, cfg.n_samples, rng)
    base = build_example(cfg, params, draws)
    perm = np.random.default_rng(seed ^ 0xABCDEF).permutation(40)
    moved = build_example(cfg, params, draws.permuted(perm))
    inv = np.argsort(perm)
    assert np.array_equal(moved.xs[inv], base.xs)
    assert np.array_equal(moved.ys[inv], base.ys)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        _config(K.Linear, sigma_x=-1.0)
    with pytest.raises(InvalidArgumentError):
        _config(K.Linear, n_samples=1)
    cfg = _config(K.Polynomial, seed=3)
    assert GenConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_cells():
    cells = all_cells()
    assert len(cells) == 72 and len(set(cells)) == 72
    lin = parse_cells("linear, PowerLaw")
    assert len(lin) == 18 and {c[2] for c in lin} == {K.Linear, K.PowerLaw}
    with pytest.raises(InvalidArgumentError):
        parse_cells("Sine")


def test_assemble_counts_and_balance():
    ds = assemble_dataset(all_cells(), 2, 7, n_samples=60)
    assert len(ds.examples) == 144
    assert Counter(ex.label for ex in ds.examples) == {Direction.XtoY: 72, Direction.YtoX: 72}
    per_cell = Counter((ex.meta.cell, ex.label) for ex in ds.examples)
    assert all(per_cell[(c, d)] == 1 for c in range(72) for d in Direction)


def test_assemble_deterministic_and_thread_independent():
    cells = parse_cells("Brownianlike,Polynomial")
    a = assemble_dataset(cells, 4, 11, n_samples=50, threads=1)
    b = assemble_dataset(cells, 4, 11, n_samples=50, threads=3)
    ja = json.dumps(dataset_manifest(a), sort_keys=True)
    assert ja == json.dumps(dataset_manifest(b), sort_keys=True)
    assert all(np.array_equal(x.xs, y.xs) and np.array_equal(x.ys, y.ys)
               for x, y in zip(a.examples, b.examples))


def test_swapped_examples_exchange_axes():
    ds = assemble_dataset(parse_cells("Exponential")[:1], 2, 3, n_samples=40)
    fwd = [e for e in ds.examples if e.label is Direction.XtoY][0]
    back = fwd.swapped()
    assert back.label is Direction.YtoX and np.array_equal(back.xs, fwd.ys)


@pytest.mark.parametrize("per_cell", [0, 1, 3])
def test_assemble_rejects_odd(per_cell):
    with pytest.raises(InvalidArgumentError):
        assemble_dataset(all_cells()[:1], per_cell, 0)


def test_size_model_sampling_with_mixture_fit():
    rng = np.random.default_rng(0)
    sizes = np.round(np.concatenate([rng.normal(500, 3, 200), rng.normal(2000, 50, 40),
                                     rng.normal(100, 5, 60)])).astype(int)
    m = fit_size_model(sizes)
    assert abs(m.weights.sum() - 1) < 1e-9 and np.all(m.stds > 0)
    dominant = int(np.argmax(m.weights))
    assert abs(m.means[dominant] - 500) < 10
    assert np.all(np.diff(m.loglik_history) >= -1e-9)
    draws = m.sample(rng, 1000)
    assert draws.dtype.kind == "i" and draws.min() >= 20 and draws.max() <= 10_000


def test_size_model_tight_cluster():
    sizes = np.random.default_rng(1).normal(500, 4, 300).round().astype(int)
    m = fit_size_model(sizes)
    assert abs(m.means[np.argmax(m.weights)] - 500) < 10


def test_size_model_needs_three_values():
    with pytest.raises(InvalidArgumentError):
        fit_size_model([30, 30, 40, 40])


def test_size_model_drives_sample_counts():
    m = fit_size_model([80, 90, 100, 110, 120, 300, 310, 320])
    ds = assemble_dataset(all_cells()[:2], 2, 1, size_model=m)
    assert {len(e.xs) for e in ds.examples} != {500}


def _example():
    return generate_example(_config(K.Linear, n_samples=300, seed=5))


def test_noisify_zero_is_identity(rng):
    ex = _example()
    out = noisify(ex, 0.0, 0.0, rng)
    assert np.array_equal(out.xs, ex.xs) and np.array_equal(out.ys, ex.ys)
    assert out.label is ex.label


def test_noisify_deterministic_and_scaled():
    ex = _example()
    a = noisify(ex, 0.05, 0.05, np.random.default_rng(8))
    b = noisify(ex, 0.05, 0.05, np.random.default_rng(8))
    assert np.array_equal(a.ys, b.ys) and np.array_equal(a.xs, ex.xs)
    assert a.ys.min() == 0.0 and a.ys.max() == 1.0


def test_heavy_noise_weakens_dependence():
    ex = _example()
    noisy = noisify(ex, 10.0, 0.0, np.random.default_rng(2))
    assert hoeffding_d(noisy.xs, noisy.ys) < hoeffding_d(ex.xs, ex.ys)


def test_noisify_rejects_negative(rng):
    with pytest.raises(InvalidArgumentError):
        noisify(_example(), -0.1, 0.0, rng)
