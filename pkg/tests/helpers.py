import numpy as np

from core.model.types import ModelConfig, ParameterState


def make_state(k=2, D=1, p=3, pi=0.5, phi=100.0, mu=None, z=None):
    n = 2 ** k
    return ParameterState(
        mu=np.asarray(mu, dtype=float) if mu is not None else np.tile(np.arange(1, k + 1, dtype=float)[:, None] * 5.0, (1, D)),
        phi=np.full((n, D), phi),
        s=np.ones((p, D)),
        z_star=np.zeros(p, dtype=np.int64) if z is None else np.asarray(z, dtype=np.int64),
        pi=np.full(k, pi),
    )


def make_config(k=2, scheme="additive", **kwargs):
    return ModelConfig(k=k, scheme=scheme, **kwargs)
