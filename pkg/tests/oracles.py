"""Reference computations that share no code with the package."""
import math

import mpmath


def log_product_oracle(n, beta, eps, head=400, dps=50):
    """``-n sum_{l>n} ln(1 - 2 delta(l))`` by direct summation plus an integral tail.

    The tail ``sum_{l>=a} f(l)`` is replaced by ``int_a^inf f + f(a)/2 - f'(a)/12``;
    with ``y(t) = 2 delta(t)`` decaying like ``e^(-beta t / n)`` the integral is
    ``n (n / beta) Li_2(y(a))``.
    """
    with mpmath.workdps(dps):
        n_, b, e = mpmath.mpf(n), mpmath.mpf(beta), mpmath.mpf(eps)
        omega = mpmath.pi ** (n_ / 2) / mpmath.gamma(n_ / 2 + 1)

        def y(t):
            return 2 * (2 * e * mpmath.exp(-b * t) / omega) ** (1 / n_)

        total = mpmath.mpf(0)
        for l in range(n + 1, n + 1 + head):
            yl = y(l)
            if yl >= 1:
                return mpmath.inf
            total += -n_ * mpmath.log(1 - yl)
        a = n + 1 + head
        ya = y(a)
        f_a = -n_ * mpmath.log(1 - ya)
        fp_a = -b * ya / (1 - ya)
        total += n_ * (n_ / b) * mpmath.polylog(2, ya) + f_a / 2 - fp_a / 12
        return total


def lattice_ball_count(res, radius_in_steps):
    """Grid points ``(i, j)`` of a periodic ``res x res`` lattice with ``i^2 + j^2 <= r^2``."""
    r2 = radius_in_steps * radius_in_steps * (1 + 1e-12)
    half = res // 2
    count = 0
    for i in range(-half, res - half):
        for j in range(-half, res - half):
            if i * i + j * j <= r2:
                count += 1
    return count


def cap_area(R, theta):
    return 2 * math.pi * R * R * (1 - math.cos(theta))
