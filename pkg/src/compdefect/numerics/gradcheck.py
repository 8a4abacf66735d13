from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autograd import NumericsError, Tensor, dropout_activity, no_grad, relu_pattern


class DropoutActive(NumericsError):
    """The checked function is stochastic: dropout fired while evaluating it."""


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_parameter: str
    worst_index: tuple[int, ...]
    coordinates_checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


# Below this magnitude a gradient is compared absolutely; the difference
# quotient of an O(1) loss at eps=1e-4 is good to ~1e-11.
ABS_FLOOR = 1e-6


def relative_error(a: float, n: float, floor: float = ABS_FLOOR) -> float:
    return abs(a - n) / max(abs(a), abs(n), floor)


def grad_check(
    fn: Callable[[], Tensor],
    params: dict[str, Tensor],
    tolerance: float = 1e-4,
    eps: float = 1e-4,
    max_coords: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare backprop gradients with central finite differences.

    The difference quotient is the five-point stencil.  ReLU masks are
    frozen at the unperturbed point while differencing, so a kink near the
    point cannot corrupt the estimate; at the point itself both routes use
    the same mask.

    ``fn`` rebuilds the scalar from ``params`` on every call.  With
    ``max_coords`` set, at most that many coordinates per parameter are
    sampled (seeded); otherwise every coordinate is checked.
    """
    for p in params.values():
        p.zero_grad()
    before = dropout_activity()
    with relu_pattern() as masks:
        loss = fn()
    if dropout_activity() != before:
        raise DropoutActive("grad_check requires dropout to be disabled")
    if loss.data.size != 1:
        raise NumericsError("grad_check needs a scalar-valued function")
    loss.backward()
    rng = np.random.default_rng(seed)
    worst = (0.0, "", ())
    checked = 0
    for name, p in params.items():
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        flat_idx = np.arange(p.data.size)
        if max_coords is not None and p.data.size > max_coords:
            flat_idx = np.sort(rng.choice(p.data.size, size=max_coords, replace=False))
        for fi in flat_idx:
            idx = np.unravel_index(fi, p.data.shape)
            orig = p.data[idx]
            f = {}
            with no_grad():
                for k in (-2, -1, 1, 2):
                    p.data[idx] = orig + k * eps
                    with relu_pattern(masks):
                        f[k] = float(fn().data)
            p.data[idx] = orig
            numeric = (8 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12 * eps)
            err = relative_error(float(analytic[idx]), numeric)
            checked += 1
            if err > worst[0] or not worst[1]:
                worst = (err, name, tuple(int(i) for i in idx))
    return GradCheckReport(worst[0], worst[1], worst[2], checked, tolerance)
