"""Event-driven FCFS bandwidth scheduler for the shared uplink channel.

Workers request their assigned bandwidth once local computation finishes.
A request is admitted immediately if the channel has enough residual
capacity, otherwise it joins a FIFO queue whose head is re-examined at every
bandwidth release (head-of-line blocking: a smaller later request never
bypasses a blocked head).  Checking at release events only is exact for
piecewise-constant occupancy, so no time discretization is needed.
"""

from __future__ import annotations

import heapq
import io
from collections import deque
from dataclasses import dataclass, field

# Relative slack for capacity comparisons so exact-fit allocations
# (e.g. K requests of capacity/K) survive float rounding.
_CAP_REL_TOL = 1e-9


@dataclass(frozen=True)
class TransmissionRequest:
    """One worker's ask for uplink bandwidth.

    Attributes:
        worker: worker index.
        ready_at: time (s) the worker finishes computing and requests the channel.
        bandwidth: requested bandwidth, Hz.
        duration_if_served: transmission time (s) once admitted.
    """

    worker: int
    ready_at: float
    bandwidth: float
    duration_if_served: float

    def __post_init__(self) -> None:
        if self.ready_at < 0.0 or self.bandwidth < 0.0 or self.duration_if_served < 0.0:
            raise ValueError("ready_at, bandwidth and duration must be >= 0")


@dataclass(frozen=True)
class ScheduleOutcome:
    """How one request fared within the round deadline."""

    worker: int
    queued_for: float
    started_at: float | None
    finished_at: float | None
    completed_by_deadline: bool
    never_admitted: bool

    @property
    def admitted(self) -> bool:
        return self.started_at is not None


@dataclass
class ChannelTimeline:
    """Ordered admission (+bw) and release (-bw) events on one channel.

    Event tuples are ``(time, worker, signed_bandwidth)``.  At every instant
    the active bandwidth never exceeds ``capacity``.
    """

    capacity: float
    events: list[tuple[float, int, float]] = field(default_factory=list)


QUEUE_DISCIPLINES = ("fcfs_blocking", "fcfs_first_fit")


def schedule_round(
    requests,
    capacity: float,
    deadline: float,
    queue_discipline: str = "fcfs_blocking",
) -> tuple[dict[int, ScheduleOutcome], ChannelTimeline]:
    """Run the FCFS scheduler over one round.

    Requests are considered in ``ready_at`` order (ties broken by worker
    index).  A worker asking for more than the whole channel, or still
    unserved when the deadline strikes, is flagged ``never_admitted``;
    admitted workers that finish past the deadline are marked not completed.

    Under the default ``fcfs_blocking`` discipline only the queue head is
    examined at each release, so a blocked head holds everyone behind it;
    ``fcfs_first_fit`` lets later queued requests that fit the residual
    capacity bypass a blocked head (queue order is still respected among
    the requests that fit).
    """
    if deadline <= 0.0:
        raise ValueError(f"deadline must be > 0, got {deadline}")
    if queue_discipline not in QUEUE_DISCIPLINES:
        raise ValueError(f"queue_discipline must be one of {QUEUE_DISCIPLINES}")
    blocking = queue_discipline == "fcfs_blocking"
    tol = _CAP_REL_TOL * capacity
    pending = sorted(requests, key=lambda r: (r.ready_at, r.worker))
    seen = [r.worker for r in pending]
    if len(set(seen)) != len(seen):
        raise ValueError("duplicate worker indices in request set")

    # Requests larger than the whole channel can never be served.
    pending = [r for r in pending if r.bandwidth <= capacity + tol]

    admissions: dict[int, tuple[float, float]] = {}  # worker -> (start, finish)
    active: list[tuple[float, int, float]] = []  # heap of (finish, worker, bw)
    queue: deque[TransmissionRequest] = deque()
    active_sum = 0.0
    i = 0

    def admit(req: TransmissionRequest, now: float) -> None:
        nonlocal active_sum
        finish = now + req.duration_if_served
        admissions[req.worker] = (now, finish)
        active_sum += req.bandwidth
        heapq.heappush(active, (finish, req.worker, req.bandwidth))

    while i < len(pending) or queue or active:
        t_arrival = pending[i].ready_at if i < len(pending) else float("inf")
        t_release = active[0][0] if active else float("inf")
        now = min(t_arrival, t_release)
        if now == float("inf"):
            break  # nothing can make further progress (e.g. infinite durations)
        while active and active[0][0] <= now:
            _, _, bw = heapq.heappop(active)
            active_sum -= bw
        # Earlier-queued workers outrank same-instant arrivals (FCFS).
        if blocking:
            while queue and active_sum + queue[0].bandwidth <= capacity + tol:
                admit(queue.popleft(), now)
        else:
            kept: deque[TransmissionRequest] = deque()
            for req in queue:
                if active_sum + req.bandwidth <= capacity + tol:
                    admit(req, now)
                else:
                    kept.append(req)
            queue = kept
        while i < len(pending) and pending[i].ready_at == now:
            req = pending[i]
            i += 1
            fits = active_sum + req.bandwidth <= capacity + tol
            if fits and (not queue if blocking else True):
                admit(req, now)
            else:
                queue.append(req)

    outcomes: dict[int, ScheduleOutcome] = {}
    timeline = ChannelTimeline(capacity=capacity)
    for req in sorted(requests, key=lambda r: (r.ready_at, r.worker)):
        start_finish = admissions.get(req.worker)
        if start_finish is None or start_finish[0] >= deadline:
            outcomes[req.worker] = ScheduleOutcome(
                worker=req.worker,
                queued_for=max(0.0, deadline - req.ready_at),
                started_at=None,
                finished_at=None,
                completed_by_deadline=False,
                never_admitted=True,
            )
            continue
        start, finish = start_finish
        outcomes[req.worker] = ScheduleOutcome(
            worker=req.worker,
            queued_for=start - req.ready_at,
            started_at=start,
            finished_at=finish,
            completed_by_deadline=finish <= deadline,
            never_admitted=False,
        )
        timeline.events.append((start, req.worker, req.bandwidth))
        timeline.events.append((finish, req.worker, -req.bandwidth))
    timeline.events.sort(key=lambda e: (e[0], e[2] > 0.0, e[1]))
    return outcomes, timeline


def audit_timeline(timeline: ChannelTimeline) -> tuple[bool, float | None]:
    """Sweep the event list and verify active bandwidth never exceeds capacity.

    Returns ``(True, None)`` when safe, else ``(False, first_bad_time)``.
    Releases are applied before admissions at equal instants, matching the
    scheduler's admit-at-release semantics.
    """
    tol = _CAP_REL_TOL * timeline.capacity
    events = sorted(timeline.events, key=lambda e: (e[0], e[2] > 0.0, e[1]))
    active = 0.0
    idx = 0
    while idx < len(events):
        t = events[idx][0]
        while idx < len(events) and events[idx][0] == t:
            active += events[idx][2]
            idx += 1
        if active > timeline.capacity + tol:
            return False, t
    return True, None


def timeline_csv(timeline: ChannelTimeline) -> str:
    """Render the timeline as ``time,worker,event,bandwidth_hz`` CSV for debugging."""
    buf = io.StringIO()
    buf.write("time,worker,event,bandwidth_hz\n")
    for t, worker, delta in sorted(timeline.events, key=lambda e: (e[0], e[2] > 0.0, e[1])):
        kind = "admit" if delta > 0.0 else "release"
        buf.write(f"{t!r},{worker},{kind},{abs(delta)!r}\n")
    return buf.getvalue()
