import numpy as np
import pytest

from socialdp.environment import OptionSet, draw_qualities, empirical_rates, quality_history


def test_option_set_validation():
    assert OptionSet((0.9, 0.5)).best == 0.9
    with pytest.raises(ValueError):
        OptionSet((1.2, 0.5))
    with pytest.raises(ValueError):
        OptionSet(())
    with pytest.warns(UserWarning):
        opts = OptionSet((0.5, 0.9))
    assert opts.best == 0.9


def test_linear_options():
    assert OptionSet.linear(5).etas == pytest.approx((0.9, 0.8, 0.7, 0.6, 0.5))
    assert OptionSet.linear(1).etas == (0.9,)


def test_degenerate_qualities():
    opts = OptionSet((1.0, 0.0))
    for r in range(1, 20):
        assert draw_qualities(opts, r, seed=3).phi.tolist() == [1, 0]


def test_draws_are_pure_and_readonly():
    opts = OptionSet((0.6, 0.4, 0.2))
    a = draw_qualities(opts, 7, seed=11)
    assert np.array_equal(a.phi, draw_qualities(opts, 7, seed=11).phi)
    with pytest.raises(ValueError):
        a.phi[0] = 1
    with pytest.raises(ValueError):
        draw_qualities(opts, 0, seed=1)


def test_empirical_rates():
    opts = OptionSet((0.9, 0.6, 0.3))
    draws = [draw_qualities(opts, r, seed=5) for r in range(1, 20_001)]
    rates = empirical_rates(draws)
    sd = np.sqrt(np.array(opts.etas) * (1 - np.array(opts.etas)) / 20_000)
    assert np.all(np.abs(rates - opts.etas) <= 4 * sd)
    assert np.array_equal(quality_history(opts, 50, seed=5), np.array([d.phi for d in draws[:50]]))


def test_signals_independent_across_options():
    with pytest.warns(UserWarning):
        opts = OptionSet((0.5, 0.5))
    hist = quality_history(opts, 20_000, seed=2).astype(float)
    corr = np.corrcoef(hist.T)[0, 1]
    assert abs(corr) < 4 / np.sqrt(20_000)


def test_per_agent_mode():
    phi = draw_qualities(OptionSet((0.7, 0.2)), 1, seed=0, n_agents=5000).phi
    assert phi.shape == (5000, 2)
    assert np.abs(phi.mean(axis=0) - [0.7, 0.2]).max() < 0.03
