"""
Reference parameters and eigenvalues shared by the test suite.
"""

import numpy as np

from qbicladder.model import ModelParams

CANONICAL = ModelParams(t_h=1.0, tp_h=0.345, g=0.1, e_d=0.3)

PI = np.pi

# label: (E, K+, K-, sheet) at CANONICAL; omitted real or imaginary parts are exact zeros
CANONICAL_STATES = {
    "P1": (1.34501152, PI + 1.11593256j, PI + 0.00480148j, "I"),
    "P2": (-1.34500463, 0.00304629j, 1.11592751j, "I"),
    "Q1": (1.34501136, PI - 1.11593245j, PI + 0.00476787j, "II"),
    "Q2": (-0.65501370 - 1.5093e-7j, 1.25558888 - 1.5875e-7j, -0.00002882 + 0.00523534j, "II"),
    "Q3": (-0.65501370 + 1.5093e-7j, -1.25558888 - 1.5875e-7j, 0.00002882 + 0.00523534j, "II"),
    "Q4": (0.29998854 - 0.00153774j, 2.27180290 - 0.00201224j, -1.52576970 + 0.00153930j, "II"),
    "Q5": (0.29998854 + 0.00153774j, -2.27180290 - 0.00201224j, 1.52576970 + 0.00153930j, "II"),
    "R1": (-1.34500459, 0.00303273j, -1.11592748j, "III"),
    "R2": (0.65509906 - 2.9331e-6j, -3.14138429 + 0.01407702j, 1.88609355 - 3.0852e-6j, "III"),
    "R3": (0.65509906 + 2.9331e-6j, 3.14138429 + 0.01407702j, -1.88609355 - 3.0852e-6j, "III"),
    "S1": (0.29991927 - 0.01154476j, 2.27161773 - 0.01510419j, 1.52570333 - 0.01155625j, "IV"),
    "S2": (0.29991927 + 0.01154476j, -2.27161773 - 0.01510419j, -1.52570333 - 0.01155625j, "IV"),
}

CANONICAL_LABELS = list(CANONICAL_STATES)

SHEET_COUNTS = {"I": 2, "II": 5, "III": 3, "IV": 2}

# bound state of the - channel alone at CANONICAL
ONE_CHANNEL_MINUS = (-0.65501371, 0.00523550j)

# decay rates 2 |Im E| at CANONICAL; the dot survival follows S1
Q4_DECAY_RATE = 2 * 0.00153774
S1_DECAY_RATE = 2 * 0.01154476


def random_params(n: int, seed: int = 0) -> list[ModelParams]:
    """parameter draws with t' in (0, 1), g in (0, 0.3] and E_d in [-2, 2]"""
    rng = np.random.default_rng(seed)
    tp = rng.uniform(0.0, 1.0, n)
    g = 0.3 * (1.0 - rng.uniform(0.0, 1.0, n))
    e_d = rng.uniform(-2.0, 2.0, n)
    return [ModelParams(tp_h=a, g=b, e_d=c) for a, b, c in zip(tp, g, e_d)]
