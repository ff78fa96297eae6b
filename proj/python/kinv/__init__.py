from ._kinv import *  # noqa: F401,F403
from ._kinv import __doc__  # noqa: F401


def history_arrays(state):
    import numpy as np

    rows = state.history
    return {
        "n": np.array([r.n for r in rows]),
        "loss": np.array([r.loss for r in rows]),
        "step": np.array([r.step for r in rows]),
        "grad_norm": np.array([r.grad_norm for r in rows]),
        "rel_error": np.array([r.rel_error for r in rows]),
    }
