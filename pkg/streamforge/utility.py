from collections import Counter

import numpy as np
from scipy.stats import entropy as _entropy


def stable_softmax(X, axis=-1):
    """Softmax of `X` along `axis`, shifted by the maximum for stability."""
    X = np.asarray(X, dtype=float)
    exps = np.exp(X - np.max(X, axis=axis, keepdims=True))
    return exps / np.sum(exps, axis=axis, keepdims=True)


def _labels(*columns):
    """Rows of the given columns as hashable outcomes."""
    if len(columns) == 1:
        return list(columns[0])
    return list(zip(*columns))


def entropy(*columns):
    """Plug-in joint entropy, in bits, of categorical samples.

    Parameters
    ----------
    *columns : sequence
        One or more equally long sample columns; several columns are taken
        jointly.

    Returns
    -------
    float
        Entropy estimate, 0 for empty samples.
    """
    outcomes = _labels(*columns)
    if not outcomes:
        return 0.0
    counts = list(Counter(outcomes).values())
    return float(_entropy(counts, base=2))


def conditional_entropy(target, *given):
    """Plug-in ``H(target | given)`` in bits."""
    if not given:
        return entropy(target)
    return entropy(target, *given) - entropy(*given)


def mutual_information(x, y):
    """Plug-in ``I(x; y)`` in bits."""
    return entropy(x) + entropy(y) - entropy(x, y)


def print_results(vector, name="stream", file=None):
    """Print one aligned ``feature value`` line per feature of `vector`,
    under a ``Features of <name>:`` header.
    """
    width = max((len(k) for k in vector), default=0) + 2
    lines = [f"Features of {name}:"]
    lines += [f"  {k:<{width}}{float(v):.4f}" for k, v in vector.items()]
    print("\n".join(lines), file=file)
