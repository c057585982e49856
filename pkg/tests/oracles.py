"""Independent brute-force oracles the product code is checked against."""

import math


def trapezoid_wind_power(v_lo, v_hi, air_density, sweep_area, shape, points=10_001):
    """Dense trapezoid quadrature of the Weibull-weighted power integral."""
    lo, hi = sorted((v_lo, v_hi))
    if lo == hi:
        return 0.5 * air_density * sweep_area * lo**3
    scale = 0.5 * (lo + hi) / math.gamma(1.0 + 1.0 / shape)
    step = (hi - lo) / (points - 1)
    total = 0.0
    prev = None
    for i in range(points):
        v = lo + i * step
        power = 0.5 * air_density * sweep_area * v**3
        x = v / scale
        pdf = (shape / scale) * x ** (shape - 1.0) * math.exp(-(x**shape))
        value = power * pdf
        if prev is not None:
            total += 0.5 * (prev + value) * step
        prev = value
    return total


def settle_oracle(demand, harvest, battery, capacity):
    """Closed-form hierarchical settlement (harvest, then battery, then grid).

    Derived directly from the battery-evolution equation rather than the
    sequential bucket subtraction used in production.
    """
    renewable_used = min(demand, harvest)
    battery_used = min(battery, max(0.0, demand - harvest))
    grid_used = max(0.0, demand - harvest - battery)
    battery_after = min(capacity, max(0.0, battery + harvest - demand))
    return renewable_used, battery_used, grid_used, battery_after


def tick_schedule(requests, capacity, deadline_ms, tick_ms=1):
    """Per-tick brute-force FCFS simulator with head-of-line blocking.

    ``requests`` is a list of ``(worker, ready_ms, bandwidth, duration_ms)``
    with integer times.  Returns ``{worker: (start_ms, finish_ms)}`` with
    ``None`` entries for workers never admitted (ignoring the deadline; the
    caller applies deadline semantics).
    """
    order = sorted(requests, key=lambda r: (r[1], r[0]))
    admitted = {}
    active = []  # (finish_ms, bandwidth)
    queue = []
    idx = 0
    t = 0
    horizon = max([r[1] + r[3] for r in order], default=0) + sum(r[3] for r in order) + 10
    while t <= horizon and (idx < len(order) or queue or active):
        active = [(f, bw) for f, bw in active if f > t]
        used = sum(bw for _, bw in active)
        while queue and used + queue[0][2] <= capacity * (1 + 1e-9):
            worker, _, bw, dur = queue.pop(0)
            admitted[worker] = (t, t + dur)
            active.append((t + dur, bw))
            used += bw
        while idx < len(order) and order[idx][1] == t:
            req = order[idx]
            idx += 1
            if req[2] > capacity * (1 + 1e-9):
                continue
            if not queue and used + req[2] <= capacity * (1 + 1e-9):
                admitted[req[0]] = (t, t + req[3])
                active.append((t + req[3], req[2]))
                used += req[2]
            else:
                queue.append(req)
        t += tick_ms
    return {r[0]: admitted.get(r[0]) for r in order}


def indicators_from_timeline(timeline, tau, participated, deadline):
    """Recompute deadline and admission flags from raw timeline events.

    A participating worker that has no admission event before the deadline
    was never served in time; one whose release event lands at or past the
    deadline violated it.
    """
    starts = {}
    finishes = {}
    for t, worker, delta in timeline.events:
        if delta > 0:
            starts[worker] = t
        else:
            finishes[worker] = t
    k = len(tau)
    p1 = [0] * k
    p3 = [0] * k
    for w in range(k):
        if not participated[w]:
            continue
        if w not in starts or starts[w] >= deadline:
            p1[w] = 1
            p3[w] = 1
        elif finishes[w] >= deadline:
            p1[w] = 1
    return p1, p3
