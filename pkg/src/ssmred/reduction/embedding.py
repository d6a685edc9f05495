from __future__ import annotations

import numpy as np


def delay_embed(series, p: int, delay: int = 1) -> np.ndarray:
    """Delay-coordinate matrix of a scalar signal.

    Column ``j`` is ``(s_j, s_{j+delay}, ..., s_{j+(p-1)delay})``, giving
    ``N - (p-1)*delay`` columns.  ``series`` may be a TimeSeries or an array.
    """
    s = series.scalar() if hasattr(series, "scalar") else np.asarray(series, dtype=float).ravel()
    if p < 1 or delay < 1:
        raise ValueError("p and delay must be >= 1")
    n_cols = len(s) - (p - 1) * delay
    if n_cols < 1:
        raise ValueError(f"series of length {len(s)} too short to embed with p={p}, delay={delay}")
    return np.stack([s[i * delay : i * delay + n_cols] for i in range(p)])
