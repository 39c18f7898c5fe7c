from pathlib import Path

import numpy as np
import pytest

from jumpsync.eventmatrix import PricePanel, build_jump_event_matrix

FIXTURES = Path(__file__).parent / "fixtures"

# Three stocks A, B, C and their equally weighted ETF over five periods.
TOY_STOCKS = np.array([
    [-0.018, 0.015, -0.120],
    [-0.031, -0.067, -0.104],
    [-0.057, -0.029, 0.088],
    [0.629, 1.201, 0.017],
    [0.651, 0.062, 0.074],
])
TOY_ETF = np.array([-0.039, -0.071, 0.807, 0.001, 0.073])
TOY_ETF_JUMP = 2


def toy_mask():
    mask = np.zeros(TOY_STOCKS.shape, dtype=bool)
    mask[3, 0] = mask[4, 0] = mask[3, 1] = True
    return mask


def toy_panel():
    return PricePanel.from_returns(TOY_STOCKS, TOY_ETF, np.ones(3) / 3,
                                   asset_ids=["A", "B", "C"], etf_id="ABC")


def toy_matrix():
    return build_jump_event_matrix(toy_panel(), toy_mask(), TOY_ETF_JUMP,
                                   window_pre=2, window_post=2)


@pytest.fixture
def toy():
    return toy_matrix()


@pytest.fixture
def fixtures_dir():
    return FIXTURES
