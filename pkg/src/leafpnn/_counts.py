import numpy as np


def value_counts(values) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values (sorted, float64) with multiplicities.

    Sums taken over the sorted distinct values do not depend on the order the
    pixels arrive in.
    """
    v = np.asarray(values).ravel()
    if v.dtype == np.uint8:
        counts = np.bincount(v, minlength=256)
        keep = np.flatnonzero(counts)
        return keep.astype(np.float64), counts[keep].astype(np.float64)
    vals, counts = np.unique(v.astype(np.float64), return_counts=True)
    return vals, counts.astype(np.float64)
