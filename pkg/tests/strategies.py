"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

# dyadic and simple rational magnitudes keep exact arithmetic meaningful
VALUES = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0)


@st.composite
def patterns(draw, min_n=1, max_n=6, allow_zero=True, values=VALUES):
    n = draw(st.integers(min_n, max_n))
    upper = draw(st.lists(st.sampled_from(values), min_size=n * (n + 1) // 2,
                          max_size=n * (n + 1) // 2))
    b = np.zeros((n, n))
    b[np.triu_indices(n)] = upper
    b = b + np.triu(b, 1).T
    if not allow_zero and not b.any():
        b[0, 0] = 1.0
    return b
