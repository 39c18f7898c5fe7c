import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from jumpsync.errors import SchemaError
from jumpsync.eventmatrix import (JumpEventMatrix, PricePanel, build_jump_event_matrix,
                                  event_windows, return_spread, row_sums, synthetic_index)

from conftest import toy_mask, toy_panel


# Hand computation of the toy spreads: mean of the three stock returns
# minus the ETF return, row by row.
TOY_SPREADS = [(-0.018 + 0.015 - 0.120) / 3 + 0.039,
               (-0.031 - 0.067 - 0.104) / 3 + 0.071,
               (-0.057 - 0.029 + 0.088) / 3 - 0.807,
               (0.629 + 1.201 + 0.017) / 3 - 0.001,
               (0.651 + 0.062 + 0.074) / 3 - 0.073]


def test_toy_return_spread():
    spread = return_spread(toy_panel()).return_spread
    np.testing.assert_allclose(spread, TOY_SPREADS, atol=1e-12)
    np.testing.assert_allclose(spread, [-0.002, 0.003, -0.807, 0.614, 0.189], atol=1e-3)


def test_toy_matrix_entries(toy):
    assert toy.h == 5 and toy.q == 4
    np.testing.assert_allclose(toy.jump_values, [0.629 / 3, 0.651 / 3, 1.201 / 3], atol=1e-12)
    np.testing.assert_array_equal(toy.jump_rows, [3, 4, 3])
    assert toy.jump_assets == ["A", "A", "B"]
    np.testing.assert_allclose(toy.target, [-0.002, 0.003, -0.807, 0.004, -0.028], atol=1e-3)
    assert toy.etf_rows == (2,)


def test_row_sums_equal_spread(toy):
    np.testing.assert_allclose(toy.row_sums(), TOY_SPREADS, atol=1e-12)
    np.testing.assert_allclose(row_sums(toy.dense()), TOY_SPREADS, atol=1e-12)


def test_price_and_return_spread_consistent():
    spread = return_spread(toy_panel())
    np.testing.assert_allclose(np.diff(spread.price_spread), spread.return_spread, atol=1e-12)


def test_synthetic_index_is_weighted_sum():
    panel = toy_panel()
    np.testing.assert_allclose(synthetic_index(panel), panel.log_prices.mean(axis=1))


def test_dense_roundtrip(toy):
    again = JumpEventMatrix.from_dense(toy.dense(), etf_rows=toy.etf_rows)
    np.testing.assert_array_equal(again.dense(), toy.dense())


def test_json_roundtrip(toy):
    again = JumpEventMatrix.from_json(toy.to_json())
    np.testing.assert_array_equal(again.dense(), toy.dense())
    assert again.jump_assets == toy.jump_assets and again.etf_rows == toy.etf_rows


def test_from_dense_rejects_bad_column():
    with pytest.raises(ValueError):
        JumpEventMatrix.from_dense(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_no_stock_jumps_gives_target_only():
    panel = toy_panel()
    m = build_jump_event_matrix(panel, np.zeros((5, 3), bool), 2, 2, 2)
    assert m.q == 1 and m.n_jumps == 0
    np.testing.assert_allclose(m.target, TOY_SPREADS, atol=1e-12)


def test_window_clipped_at_sample_edge():
    m = build_jump_event_matrix(toy_panel(), toy_mask(), 1, 5, 1)
    assert m.clipped and m.start == 0 and m.h == 3
    assert m.n_jumps == 0


def test_window_clipped_at_day_boundary():
    windows = event_windows([8], 20, pre=5, post=5, day_length=10)
    assert windows[0].start == 3 and windows[0].stop == 9 and windows[0].clipped


def test_event_windows_merge_overlaps():
    w = event_windows([20, 25, 60], 100, pre=5, post=5)
    assert [(x.start, x.stop, x.etf_jumps) for x in w] == [(15, 30, (20, 25)), (55, 65, (60,))]


def test_event_windows_do_not_merge_across_days():
    w = event_windows([48, 52], 100, pre=5, post=5, day_length=50)
    assert len(w) == 2


def test_panel_schema_errors():
    with pytest.raises(SchemaError):
        PricePanel(np.zeros((5, 2)), np.ones(3), np.zeros(5))
    with pytest.raises(SchemaError):
        PricePanel(np.zeros((5, 2)), np.ones(2), np.zeros(4))
    with pytest.raises(SchemaError):
        PricePanel(np.zeros((5, 2)), [-1.0, 2.0], np.zeros(5))
    with pytest.raises(SchemaError):
        build_jump_event_matrix(toy_panel(), np.zeros((4, 3), bool), 2)


def test_columns_ordered_by_asset_then_time():
    stocks = np.zeros((6, 2))
    stocks[1, 1], stocks[4, 0], stocks[2, 0] = 0.3, 0.2, 0.1
    panel = PricePanel.from_returns(stocks, np.zeros(6), [0.5, 0.5])
    m = build_jump_event_matrix(panel, stocks != 0, 3, 3, 2)
    assert m.jump_assets == ["S1", "S1", "S2"]
    np.testing.assert_array_equal(m.jump_rows, [2, 4, 1])


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.integers(8, 20), st.data())
def test_decomposition_identity(p, n, data):
    """Row-sums of the event matrix reproduce the return spread in the window."""
    stocks = data.draw(arrays(np.float64, (n, p), elements=st.floats(-1, 1)))
    etf = data.draw(arrays(np.float64, (n,), elements=st.floats(-1, 1)))
    mask = data.draw(arrays(np.bool_, (n, p)))
    w = data.draw(arrays(np.float64, (p,), elements=st.floats(0, 1)))
    center = data.draw(st.integers(0, n - 1))
    panel = PricePanel.from_returns(stocks, etf, w)
    m = build_jump_event_matrix(panel, mask, center, 3, 3)
    spread = return_spread(panel).return_spread[m.start: m.stop + 1]
    np.testing.assert_allclose(m.row_sums(), spread, atol=1e-12)
    assert np.all(np.count_nonzero(m.dense()[:, :-1], axis=0) == 1)
