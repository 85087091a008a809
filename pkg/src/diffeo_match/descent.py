"""Backtracking line-search descent shared by the matching solvers."""

from dataclasses import dataclass, field


@dataclass
class DescentResult:
    x: object
    value: float
    iterations: int
    converged: bool
    message: str
    trace: list = field(default_factory=list)


def armijo_descent(
    value_fn,
    direction_fn,
    x0,
    step0=1.0,
    armijo_c=1e-4,
    tol_grad=1e-6,
    max_iters=100,
    min_step_factor=1e-12,
    callback=None,
):
    """Minimize value_fn by line-searched descent.

    direction_fn(x) returns (direction, rate) where ``direction`` is the
    descent step (x_next = x - tau * direction) and ``rate`` the expected
    first-order decrease per unit step, i.e. <Df(x), direction>; acceptance
    requires f(x - tau d) <= f(x) - c tau rate.  Stops when sqrt(rate) falls
    below tol_grad.
    """
    x = x0
    f = value_fn(x)
    step = step0
    trace = []
    for it in range(max_iters):
        direction, rate = direction_fn(x)
        if callback is not None:
            callback(it, x, f, rate)
        trace.append((it, f, rate))
        if rate <= tol_grad**2:
            return DescentResult(x, f, it, True, "gradient below tolerance", trace)
        tau = min(step0, 2.0 * step)
        accepted = False
        while tau >= min_step_factor * step0:
            x_try = x - tau * direction
            f_try = value_fn(x_try)
            if f_try <= f - armijo_c * tau * rate:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            return DescentResult(
                x, f, it, False, "line search failed (step underflow)", trace
            )
        x, f, step = x_try, f_try, tau
    return DescentResult(x, f, max_iters, False, "iteration budget exhausted", trace)
