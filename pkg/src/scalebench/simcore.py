"""Discrete-time simulation of the replica pool, load balancer and job queue.

One slot represents one second.  Within a slot, queued jobs (oldest first)
and then the fresh arrivals are dealt round-robin over the serving
replicas; each replica processes its share sequentially, so the i-th job
it receives this slot completes ``i * service_time`` seconds into the
slot.  A job's latency is that completion offset plus one whole slot for
every slot it spent waiting in the queue.

Replica lifecycle: a replica ordered up spends one slot booting (receives
no jobs, does not count toward CPU); a replica ordered down serves one
final slot as "draining" (still receives jobs and counts toward CPU) and
is released at the end of it.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class SimParams:
    slot_duration: float = 1.0
    service_time: float = 0.003
    boot_delay: int = 1
    shutdown_delay: int = 1
    initial_replicas: int = 2
    max_replicas_cap: int = 12
    min_replicas: int = 1

    @property
    def capacity_per_slot(self) -> int:
        # guard against quotients landing a few ulps below an integer
        return int(self.slot_duration / self.service_time + 1e-9)

    def validate(self) -> None:
        if self.service_time <= 0 or self.service_time >= self.slot_duration:
            raise ConfigError(
                f"service_time must be in (0, slot_duration), got {self.service_time}"
            )
        if self.capacity_per_slot < 1:
            raise ConfigError("capacity_per_slot must be >= 1")
        if self.min_replicas < 1:
            raise ConfigError(f"min_replicas must be >= 1, got {self.min_replicas}")
        if not self.min_replicas <= self.initial_replicas <= self.max_replicas_cap:
            raise ConfigError(
                f"initial_replicas ({self.initial_replicas}) must be within "
                f"[{self.min_replicas}, {self.max_replicas_cap}]"
            )
        # The pool state tracks boot/shutdown as "next slot" transitions,
        # so exactly one slot of delay is supported.
        if self.boot_delay != 1 or self.shutdown_delay != 1:
            raise ConfigError("boot_delay and shutdown_delay must both be 1 slot")


@dataclass(frozen=True)
class ReplicaPool:
    """active replicas serve; booting ones join next slot; draining ones
    serve one final slot before release."""

    active: int
    booting: int = 0
    draining: int = 0

    @property
    def serving(self) -> int:
        return self.active + self.draining


@dataclass(frozen=True)
class QueueState:
    """Backlogged jobs grouped as (jobs, waited_slots), oldest group first."""

    entries: tuple[tuple[int, int], ...] = ()

    @classmethod
    def empty(cls) -> "QueueState":
        return cls(())

    @property
    def total_jobs(self) -> int:
        return sum(jobs for jobs, _ in self.entries)


@dataclass(frozen=True)
class SlotResult:
    completed_jobs: int
    peak_latency_d: float
    mean_cpu_c: float
    queue_len: int
    per_replica_load: tuple[int, ...]


def apply_scaling(pool: ReplicaPool, delta: int, params: SimParams) -> tuple[ReplicaPool, bool]:
    """Apply a scaling action; returns the new pool and a cap-violation flag.

    +1 adds a booting replica (it serves from the next slot on) unless the
    pool is already at ``max_replicas_cap``, which leaves the pool
    unchanged and sets the violation flag.  -1 moves one active replica to
    draining, silently ignored at ``min_replicas``.
    """
    if delta not in (-1, 0, 1):
        raise ValueError(f"scaling delta must be -1, 0 or +1, got {delta!r}")
    if delta == 1:
        if pool.active + pool.booting >= params.max_replicas_cap:
            return pool, True
        return ReplicaPool(pool.active, pool.booting + 1, pool.draining), False
    if delta == -1:
        if pool.active <= params.min_replicas:
            return pool, False
        return ReplicaPool(pool.active - 1, pool.booting, pool.draining + 1), False
    return pool, False


def step_slot(
    pool: ReplicaPool,
    queue: QueueState,
    arrivals: int,
    params: SimParams,
) -> tuple[ReplicaPool, QueueState, SlotResult]:
    """Advance the system by one slot.

    Jobs are served strictly queue-first (FIFO across slots); whatever
    exceeds this slot's total capacity is re-queued with its wait count
    incremented.  Conservation holds exactly:
    ``arrivals + queued_before == completed + queued_after``.
    """
    if arrivals < 0:
        raise ValueError(f"arrivals must be >= 0, got {arrivals}")
    serving = pool.serving
    capacity = serving * params.capacity_per_slot

    # FIFO job groups: backlog (oldest first), then this slot's arrivals.
    groups = list(queue.entries)
    if arrivals > 0:
        groups.append((arrivals, 0))

    total_jobs = sum(jobs for jobs, _ in groups)
    completed = min(total_jobs, capacity)

    # Jobs are dealt round-robin: global job n goes to replica n % serving
    # at per-replica position n // serving + 1.
    peak_latency = 0.0
    carried: list[tuple[int, int]] = []
    n = 0
    for jobs, waited in groups:
        served_here = max(0, min(jobs, completed - n))
        if served_here > 0:
            last_position = (n + served_here - 1) // serving + 1
            latency = waited * params.slot_duration + last_position * params.service_time
            peak_latency = max(peak_latency, latency)
        if served_here < jobs:
            carried.append((jobs - served_here, waited + 1))
        n += jobs

    base, extra = divmod(completed, serving) if serving > 0 else (0, 0)
    loads = tuple(base + 1 if i < extra else base for i in range(serving))
    cpu = [min(1.0, load * params.service_time / params.slot_duration) * 100.0 for load in loads]
    mean_cpu = sum(cpu) / len(cpu) if cpu else 0.0

    new_pool = ReplicaPool(pool.active + pool.booting, 0, 0)
    new_queue = QueueState(tuple(carried))
    result = SlotResult(
        completed_jobs=completed,
        peak_latency_d=peak_latency,
        mean_cpu_c=mean_cpu,
        queue_len=new_queue.total_jobs,
        per_replica_load=loads,
    )
    return new_pool, new_queue, result
