"""Leader-coordinated reallocation protocol over a star topology.

Servers forecast their next-interval regime from worst-case demand
growth, notify the leader when outside the optimal band, and the leader
introduces donors to recipients. Direct negotiation then moves
applications so both parties head toward their optimal regime; emptied
servers park in a sleep state and overloads trigger wake-ups.
"""

from __future__ import annotations

import random
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from enum import Enum
from math import ceil

from .energy import (
    DEFAULT_SLEEP_TIMINGS,
    EnergyProfile,
    Regime,
    RegimeBoundaries,
    SleepState,
    SleepTimings,
    choose_sleep_state,
    classify_regime,
    transition_sleep,
)
from .workload import ApplicationDescriptor

LEADER = "leader"


class CapacityExceededError(ValueError):
    """Migration would overflow the destination server."""


class DestinationAsleepError(ValueError):
    """Migration target is not awake."""


@dataclass(frozen=True)
class CostModel:
    """Scaling cost constants.

    Horizontal scaling pays for the image copy and restart on top of the
    vertical component, so q >= p holds for any demand delta.
    """

    c_v: float = 1.0
    c_m: float = 5.0
    c_t: float = 1.0
    c_j: float = 0.1
    image_gb: float = 4.0
    bandwidth_gbps: float = 1.0
    energy_per_byte_nj: float = 5.0
    endpoint_overhead_j: float = 5.0

    def vertical_cost(self, demand_delta: float) -> float:
        return self.c_v * abs(demand_delta)

    def migration_latency_s(self) -> float:
        return self.image_gb / self.bandwidth_gbps

    def migration_energy_j(self) -> float:
        transfer = self.image_gb * 1e9 * self.energy_per_byte_nj * 1e-9
        return transfer + 2.0 * self.endpoint_overhead_j

    def migration_cost(self, demand_delta: float) -> float:
        return (
            self.c_m * self.image_gb
            + self.c_t * self.migration_latency_s()
            + self.vertical_cost(demand_delta)
        )

    def comm_cost(self, messages: int) -> float:
        return self.c_j * messages


@dataclass(frozen=True)
class ScalingCosts:
    """Projected per-interval costs: q horizontal, p vertical, j leader I/O."""

    q: float
    p: float
    j: float

    def __post_init__(self) -> None:
        if self.q < 0 or self.p < 0 or self.j < 0:
            raise ValueError(f"costs must be non-negative: {self}")


class DecisionKind(Enum):
    NO_ACTION = "no_action"
    VERTICAL_SCALE = "vertical_scale"
    MIGRATE_OUT = "migrate_out"
    MIGRATE_IN = "migrate_in"
    SLEEP = "sleep"
    WAKE = "wake"


LOCAL = "local"
IN_CLUSTER = "in_cluster"

_CLASSIFICATION = {
    DecisionKind.NO_ACTION: LOCAL,
    DecisionKind.VERTICAL_SCALE: LOCAL,
    DecisionKind.MIGRATE_OUT: IN_CLUSTER,
    DecisionKind.MIGRATE_IN: IN_CLUSTER,
    DecisionKind.SLEEP: IN_CLUSTER,
    DecisionKind.WAKE: IN_CLUSTER,
}


@dataclass(frozen=True)
class ReallocationDecision:
    kind: DecisionKind
    subject_apps: tuple[int, ...] = ()
    partner: int | None = None
    cost: float = 0.0
    sleep_state: SleepState | None = None

    def __post_init__(self) -> None:
        if self.kind in (DecisionKind.MIGRATE_OUT, DecisionKind.MIGRATE_IN):
            if self.partner is None:
                raise ValueError(f"{self.kind.value} requires a partner")
        if self.kind is DecisionKind.SLEEP and self.subject_apps:
            raise ValueError("sleep decisions carry no apps; shed first")

    @property
    def classification(self) -> str:
        return _CLASSIFICATION[self.kind]


@dataclass(frozen=True)
class ClusterTopology:
    """Star topology: members talk to the leader; member links exist only
    for negotiation after a leader introduction."""

    leader_id: str = LEADER
    member_ids: tuple[int, ...] = ()
    per_message_latency_s: float = 0.001
    per_byte_cost: float = 0.0


class MessageLog:
    """Optional protocol message record, one entry per message."""

    __slots__ = ("entries",)

    def __init__(self) -> None:
        self.entries: list[tuple[int, str, str, str, int]] = []

    def emit(self, interval: int, src: int | str, dst: int | str, kind: str, size: int) -> None:
        self.entries.append((interval, str(src), str(dst), kind, size))

    def lines(self) -> list[str]:
        return [f"{i},{s},{d},{k},{z}" for i, s, d, k, z in self.entries]


@dataclass(slots=True)
class ServerState:
    """One server: identity, energy characteristics, hosted apps."""

    server_id: int
    profile: EnergyProfile
    bounds: RegimeBoundaries
    sleep: SleepState = SleepState.C0
    apps: list[ApplicationDescriptor] = field(default_factory=list)
    load: float = 0.0
    lam_sum: float = 0.0
    growth: float = 0.0
    wake_available_at: int | None = None

    def refresh(self) -> None:
        """Recompute load and growth bound from the hosted apps."""
        total = 0.0
        lam = 0.0
        for app in self.apps:
            total += app.demand
            lam += app.lam
        self.load = total if total < 1.0 else 1.0
        self.lam_sum = lam

    @property
    def demand_sum(self) -> float:
        return sum(app.demand for app in self.apps)

    @property
    def regime(self) -> Regime:
        return classify_regime(self.load, self.bounds)

    @property
    def awake(self) -> bool:
        return self.sleep is SleepState.C0

    def validate(self) -> None:
        if self.sleep is not SleepState.C0 and self.apps:
            raise ValueError(f"sleeping server {self.server_id} still hosts apps")


def predicted_load(server: ServerState) -> float:
    """Worst-case next-interval load: every app grows by its full bound."""
    return server.load + server.lam_sum


def forecast_regime(
    server: ServerState,
    tau: float = 60.0,
    cost_model: CostModel = CostModel(),
) -> tuple[float, Regime, ScalingCosts]:
    """Project the next interval's load, regime, and scaling costs."""
    if not server.awake:
        raise ValueError(f"server {server.server_id} is asleep; no forecast")
    pred = predicted_load(server)
    regime = classify_regime(min(1.0, pred), server.bounds)
    p = cost_model.vertical_cost(server.lam_sum)
    q = cost_model.migration_cost(server.lam_sum)
    messages = 0 if regime is Regime.R3 else 2
    j = cost_model.comm_cost(messages)
    return (pred, regime, ScalingCosts(q=q, p=p, j=j))


def sample_boundaries(rng: random.Random | int) -> RegimeBoundaries:
    """Draw per-server regime thresholds from their uniform ranges.

    The low-suboptimal and optimal ranges share the 0.25 endpoint and the
    optimal and high-suboptimal ranges share 0.80; draws colliding there
    are retaken so the strict ordering always holds.
    """
    r = rng if isinstance(rng, random.Random) else random.Random(rng)
    a1 = r.uniform(0.20, 0.25)
    a2 = r.uniform(0.25, 0.45)
    while a2 <= a1:
        a2 = r.uniform(0.25, 0.45)
    a3 = r.uniform(0.55, 0.80)
    a4 = r.uniform(0.80, 0.85)
    while a4 <= a3:
        a4 = r.uniform(0.80, 0.85)
    return RegimeBoundaries(a1, a2, a3, a4)


@dataclass(frozen=True)
class ProtocolParams:
    """Tunable constants of the reallocation protocol."""

    vertical_grant_threshold: float = 0.05
    gather_horizon: int = 5
    sleep_benefit_weight: float = 15.0
    deep_fraction: float = 1.0
    shed_load_ceiling: float = 0.6
    gather_fill_target: float = 0.5
    fill_margin: float = 0.05

    def __post_init__(self) -> None:
        if self.gather_horizon < 1:
            raise ValueError("gather_horizon must be >= 1")
        if not 0.0 <= self.deep_fraction <= 1.0:
            raise ValueError("deep_fraction must be in [0, 1]")
        if not 0.0 <= self.gather_fill_target <= 1.0:
            raise ValueError("gather_fill_target must be in [0, 1]")
        if not 0.0 <= self.fill_margin < 1.0:
            raise ValueError("fill_margin must be in [0, 1)")


class Cluster:
    """Whole-cluster state owned by the simulation engine."""

    def __init__(
        self,
        servers: list[ServerState],
        cost_model: CostModel = CostModel(),
        sleep_timings: SleepTimings = DEFAULT_SLEEP_TIMINGS,
        params: ProtocolParams | None = None,
        log: MessageLog | None = None,
        tau: float = 60.0,
    ) -> None:
        self.servers = servers
        self.cost_model = cost_model
        self.sleep_timings = sleep_timings
        self.params = params or ProtocolParams()
        self.log = log
        self.tau = tau
        self.topology = ClusterTopology(member_ids=tuple(s.server_id for s in servers))
        # Total demand only changes when demands advance, so the engine may
        # cache the fraction once per interval instead of rescanning per call.
        self.load_hint: float | None = None

    def awake_servers(self) -> list[ServerState]:
        return [s for s in self.servers if s.awake]

    def sleepers(self) -> list[ServerState]:
        return [s for s in self.servers if not s.awake]

    def total_demand(self) -> float:
        return sum(app.demand for s in self.servers for app in s.apps)

    def cluster_load_fraction(self) -> float:
        if self.load_hint is not None:
            return self.load_hint
        return min(1.0, self.total_demand() / len(self.servers))

    def by_regime(self) -> dict[Regime, list[ServerState]]:
        # Candidate discovery keys on current load; forecasts drive only
        # the notifying server's own classification.
        out: dict[Regime, list[ServerState]] = {r: [] for r in Regime}
        for s in self.servers:
            if s.awake:
                out[s.regime].append(s)
        return out


@dataclass(frozen=True)
class MatchResult:
    """Leader's answer to a notification: annotated partner candidates."""

    sources: tuple[tuple[int, float], ...] = ()
    sinks: tuple[tuple[int, float], ...] = ()
    wake: tuple[ReallocationDecision, ...] = ()
    insufficient_capacity: bool = False


def leader_match(
    notification: tuple[int, Regime], cluster: Cluster, interval: int = 0
) -> MatchResult:
    """Pair a notifying server with candidate partners.

    Undesirably low servers get both donors to absorb from and sinks to
    shed to; lower-suboptimal servers get donors; the upper regimes get
    sinks, and an overloaded server with no sinks triggers wake-ups.
    """
    server_id, regime = notification
    if regime is Regime.R3:
        raise ValueError("servers in the optimal regime take no action")
    pools = cluster.by_regime()
    unit_cost = cluster.cost_model.migration_cost(0.0)

    def annotate(states: list[ServerState]) -> tuple[tuple[int, float], ...]:
        ids = sorted(s.server_id for s in states if s.server_id != server_id)
        return tuple((sid, unit_cost) for sid in ids)

    donors = annotate(pools[Regime.R4] + pools[Regime.R5])
    sinks = annotate(pools[Regime.R1] + pools[Regime.R2])
    if cluster.log is not None:
        cluster.log.emit(interval, server_id, LEADER, "notify", 16)
        cluster.log.emit(
            interval, LEADER, server_id, "match", 16 * max(1, len(donors) + len(sinks))
        )
    if regime is Regime.R1:
        return MatchResult(sources=donors, sinks=sinks)
    if regime is Regime.R2:
        return MatchResult(sources=donors)
    if regime is Regime.R4:
        return MatchResult(sinks=sinks)
    if sinks:
        return MatchResult(sinks=sinks)
    state = next(s for s in cluster.servers if s.server_id == server_id)
    gap = max(0.0, predicted_load(state) - state.bounds.alpha_opt_h)
    decisions, insufficient = wake_servers(cluster, gap, now=interval)
    return MatchResult(wake=tuple(d for _, d in decisions), insufficient_capacity=insufficient)


def migrate_vm(
    src: ServerState,
    dst: ServerState,
    app_id: int,
    cost_model: CostModel = CostModel(),
    log: MessageLog | None = None,
    interval: int = -1,
) -> tuple[ServerState, ServerState, float, float, float]:
    """Move one application between awake servers.

    Demand is conserved exactly; the transfer charges the link energy to
    both endpoints and costs the full horizontal price.
    """
    if not dst.awake:
        raise DestinationAsleepError(f"server {dst.server_id} is asleep")
    app = next((a for a in src.apps if a.app_id == app_id), None)
    if app is None:
        raise ValueError(f"app {app_id} is not hosted on server {src.server_id}")
    if dst.demand_sum + app.demand > 1.0 + 1e-12:
        raise CapacityExceededError(
            f"server {dst.server_id} cannot absorb demand {app.demand}"
        )
    src.apps.remove(app)
    dst.apps.append(app)
    app.home_server = dst.server_id
    src.refresh()
    dst.refresh()
    cost = cost_model.migration_cost(app.demand)
    energy = cost_model.migration_energy_j()
    latency = cost_model.migration_latency_s()
    if log is not None:
        log.emit(interval, src.server_id, dst.server_id, "transfer", int(cost_model.image_gb * 1e9))
    return (src, dst, cost, energy, latency)


def wake_servers(
    cluster: Cluster, demand_gap: float, now: int = 0
) -> tuple[list[tuple[int, ReallocationDecision]], bool]:
    """Wake the fewest sleepers whose combined capacity covers the gap.

    Shallow sleepers wake first (cheaper, faster). Returns the wake
    decisions and whether even waking everyone leaves the gap uncovered.
    """
    if demand_gap <= 0.0:
        return ([], False)
    sleepers = [s for s in cluster.sleepers() if s.wake_available_at is None]
    sleepers.sort(key=lambda s: (s.sleep, -s.bounds.alpha_opt_h, s.server_id))
    chosen: list[tuple[int, ReallocationDecision]] = []
    covered = 0.0
    for s in sleepers:
        if covered >= demand_gap:
            break
        latency, _ = transition_sleep(s.sleep, SleepState.C0, s.profile, cluster.sleep_timings)
        s.wake_available_at = now + max(1, ceil(latency / cluster.tau))
        chosen.append(
            (
                s.server_id,
                ReallocationDecision(
                    kind=DecisionKind.WAKE,
                    cost=cluster.cost_model.comm_cost(1),
                    sleep_state=s.sleep,
                ),
            )
        )
        covered += s.bounds.alpha_opt_h
        if cluster.log is not None:
            cluster.log.emit(now, LEADER, s.server_id, "wake", 16)
    return (chosen, covered < demand_gap)


def _shed_candidates(
    server: ServerState, level: float, target: float
) -> list[ApplicationDescriptor]:
    """Apps eligible to leave an overloaded server, thriftiest first.

    ``level`` is the load measure the shed loop is driving down to
    ``target``. The smallest single app that clears the target by itself
    leads, so a scarce recipient pool is not spent on oversized
    transfers; the rest follow largest-first for fastest progress when
    no one app suffices. Apps whose removal would strand the server
    below its lower optimal threshold are held back; when overload
    persists and nothing qualifies, the smallest app goes anyway.
    """
    overshoot = level - target
    apps = sorted(server.apps, key=lambda a: (a.demand, a.app_id))
    keep_floor = server.bounds.alpha_opt_l
    eligible = [a for a in apps if level - a.demand >= keep_floor]
    if eligible:
        clearing = [a for a in eligible if a.demand >= overshoot]
        rest = sorted(
            (a for a in eligible if a.demand < overshoot),
            key=lambda a: (-a.demand, a.app_id),
        )
        return clearing[:1] + rest + clearing[1:]
    if level > server.bounds.alpha_sopt_h and apps:
        return [apps[0]]
    return []


class RecipientPool:
    """Recipients ordered by remaining capacity for tightest-fit placement.

    Capacity is the room left below the optimal-high bound, bounded by
    absolute hosting room, so no placement can push a recipient past its
    optimal band at acceptance time.  A positive ``margin`` additionally
    keeps the post-placement load that far below the overload threshold,
    so a freshly filled recipient is not one drift step from needing
    relief itself.
    """

    __slots__ = ("entries", "states", "margin")

    def __init__(self, servers: list[ServerState], margin: float = 0.0) -> None:
        self.margin = margin
        self.states: dict[int, ServerState] = {}
        self.entries: list[tuple[float, int]] = []
        for s in sorted(servers, key=lambda s: s.server_id):
            cap = self._capacity(s)
            if cap > 1e-12:
                self.states[s.server_id] = s
                insort(self.entries, (cap, s.server_id))

    def _capacity(self, s: ServerState) -> float:
        ceiling = min(s.bounds.alpha_opt_h, s.bounds.alpha_sopt_h - self.margin)
        room_now = ceiling - s.load
        room_abs = 1.0 - s.demand_sum
        return min(room_now, room_abs)

    def __len__(self) -> int:
        return len(self.entries)

    def place(self, app: ApplicationDescriptor, exclude: int | None = None) -> ServerState | None:
        """Pick the tightest-fitting recipient for ``app``, updating it.

        Stored capacities can be stale (pool members may have grown through
        other flows within the interval), so every candidate is re-measured
        before acceptance; shrunken entries are repositioned, never trusted.
        """
        need = app.demand
        stale: list[tuple[float, int]] = []

        def restore() -> None:
            for entry in stale:
                insort(self.entries, entry)

        i = bisect_left(self.entries, (need, -1))
        while i < len(self.entries):
            _, sid = self.entries[i]
            s = self.states[sid]
            if sid == exclude:
                i += 1
                continue
            live = self._capacity(s)
            if live + 1e-12 < need:
                self.entries.pop(i)
                if live > 1e-12:
                    stale.append((live, sid))
                else:
                    del self.states[sid]
                continue
            self.entries.pop(i)
            s.apps.append(app)
            app.home_server = sid
            s.refresh()
            new_cap = self._capacity(s)
            if new_cap > 1e-12:
                insort(self.entries, (new_cap, sid))
            else:
                del self.states[sid]
            restore()
            return s
        restore()
        return None

    def unplace(self, app: ApplicationDescriptor, recipient: ServerState) -> None:
        """Undo a tentative placement made by :meth:`place`."""
        recipient.apps.remove(app)
        recipient.refresh()
        old = None
        for j, (cap, sid) in enumerate(self.entries):
            if sid == recipient.server_id:
                old = j
                break
        if old is not None:
            self.entries.pop(old)
        if recipient.server_id not in self.states:
            self.states[recipient.server_id] = recipient
        insort(self.entries, (self._capacity(recipient), recipient.server_id))

    def remove(self, server_id: int) -> None:
        """Drop a server from the pool (it slept or left the regime)."""
        for j, (_, sid) in enumerate(self.entries):
            if sid == server_id:
                self.entries.pop(j)
                break
        self.states.pop(server_id, None)


def negotiate(
    initiator: ServerState,
    match: MatchResult,
    costs: ScalingCosts,
    cluster: Cluster,
    interval: int = 0,
    sinks_pool: RecipientPool | None = None,
    donor_states: list[ServerState] | None = None,
) -> list[ReallocationDecision]:
    """Resolve one notification into concrete reallocation decisions.

    Overloaded initiators shed toward their optimal band, cheapest
    candidate first; upper-suboptimal initiators absorb growth locally
    when that is cheaper than migrating; undesirably low initiators
    either gather work or shed everything and sleep, whichever costs
    less. The engine passes shared ``sinks_pool``/``donor_states`` so one
    interval's negotiations see each other's placements; standalone calls
    build them from the match result.
    """
    pred, regime, _ = forecast_regime(initiator, cost_model=cluster.cost_model)
    params = cluster.params
    decisions: list[ReallocationDecision] = []
    if regime is Regime.R3:
        return decisions

    def log_negotiation(partner: int) -> None:
        if cluster.log is not None:
            cluster.log.emit(interval, initiator.server_id, partner, "negotiate", 32)

    def resolve(ids: tuple[tuple[int, float], ...]) -> list[ServerState]:
        by_id = {s.server_id: s for s in cluster.servers}
        return [by_id[sid] for sid, _ in ids if by_id[sid].awake]

    def sinks() -> RecipientPool:
        if sinks_pool is not None:
            return sinks_pool
        return RecipientPool(resolve(match.sinks), margin=cluster.params.fill_margin)

    def donors() -> list[ServerState]:
        if donor_states is not None:
            return donor_states
        return resolve(match.sources)

    if regime in (Regime.R4, Regime.R5):
        deep_threshold = initiator.bounds.alpha_opt_h + params.deep_fraction * (
            initiator.bounds.alpha_sopt_h - initiator.bounds.alpha_opt_h
        )
        must_shed = regime is Regime.R5 or pred > deep_threshold
        if not must_shed:
            if (
                initiator.growth > params.vertical_grant_threshold
                and pred <= 1.0
                and costs.p < costs.q
            ):
                return [
                    ReallocationDecision(
                        kind=DecisionKind.VERTICAL_SCALE,
                        cost=cluster.cost_model.vertical_cost(initiator.growth),
                    )
                ]
            return []
        pool = sinks()
        # When the cluster runs hot, recipient room below the optimal
        # ceiling is scarce: spend it only on clearing real overload, not
        # on chasing the worst-case forecast down to the optimal band.
        hot = cluster.cluster_load_fraction() > params.shed_load_ceiling
        if hot:
            target = initiator.bounds.alpha_sopt_h
            measure = lambda: initiator.load
        else:
            target = initiator.bounds.alpha_opt_h
            measure = lambda: predicted_load(initiator)
        moved: dict[int, list[int]] = {}
        while measure() > target:
            placed = False
            for app in _shed_candidates(initiator, measure(), target):
                recipient = pool.place(app, exclude=initiator.server_id)
                if recipient is not None:
                    initiator.apps.remove(app)
                    initiator.refresh()
                    moved.setdefault(recipient.server_id, []).append(app.app_id)
                    log_negotiation(recipient.server_id)
                    placed = True
                    break
            if not placed:
                break
        for partner, app_ids in sorted(moved.items()):
            decisions.append(
                ReallocationDecision(
                    kind=DecisionKind.MIGRATE_OUT,
                    subject_apps=tuple(app_ids),
                    partner=partner,
                    cost=costs.q * len(app_ids),
                )
            )
        return decisions

    if regime is Regime.R2:
        return _gather(initiator, donors(), costs, cluster, decisions, log_negotiation)

    donor_list = donors()
    gather_possible = any(predicted_load(d) > d.bounds.alpha_opt_h for d in donor_list)
    allow_shed = (
        cluster.cluster_load_fraction() <= params.shed_load_ceiling or not gather_possible
    )
    shed_wins = True
    if gather_possible:
        donor_apps = [a.demand for d in donor_list for a in d.apps]
        mean_app = sum(donor_apps) / len(donor_apps) if donor_apps else 0.0
        gap = max(0.0, _gather_target(initiator, params) - pred)
        est_in = max(1, ceil(gap / mean_app)) if mean_app > 0 else 1
        gather_cost = est_in * costs.q
        state = choose_sleep_state(cluster.cluster_load_fraction())
        saved_fraction = (
            initiator.profile.idle_fraction
            - cluster.sleep_timings.residual_fraction[state]
        )
        shed_cost = len(initiator.apps) * costs.q - (
            params.sleep_benefit_weight * saved_fraction * params.gather_horizon
        )
        shed_wins = allow_shed and shed_cost < gather_cost
    if not shed_wins:
        return _gather(initiator, donor_list, costs, cluster, decisions, log_negotiation)
    if not allow_shed:
        return []
    pool = sinks()
    placements: list[tuple[ApplicationDescriptor, ServerState]] = []
    for app in sorted(initiator.apps, key=lambda a: (-a.demand, a.app_id)):
        recipient = pool.place(app, exclude=initiator.server_id)
        if recipient is None:
            for moved_app, r in placements:
                pool.unplace(moved_app, r)
                moved_app.home_server = initiator.server_id
            return []
        placements.append((app, recipient))
    moved = {}
    for app, recipient in placements:
        initiator.apps.remove(app)
        moved.setdefault(recipient.server_id, []).append(app.app_id)
        log_negotiation(recipient.server_id)
    initiator.refresh()
    for partner, app_ids in sorted(moved.items()):
        decisions.append(
            ReallocationDecision(
                kind=DecisionKind.MIGRATE_OUT,
                subject_apps=tuple(app_ids),
                partner=partner,
                cost=costs.q * len(app_ids),
            )
        )
    state = choose_sleep_state(cluster.cluster_load_fraction())
    initiator.sleep = state
    pool.remove(initiator.server_id)
    decisions.append(
        ReallocationDecision(
            kind=DecisionKind.SLEEP,
            cost=cluster.cost_model.comm_cost(1),
            sleep_state=state,
        )
    )
    return decisions


def _gather_target(initiator: ServerState, params: ProtocolParams) -> float:
    """Predicted load a gathering server aims for inside its optimal band."""
    low = initiator.bounds.alpha_opt_l
    high = initiator.bounds.alpha_opt_h
    return low + params.gather_fill_target * (high - low)


def _gather(
    initiator: ServerState,
    donors: list[ServerState],
    costs: ScalingCosts,
    cluster: Cluster,
    decisions: list[ReallocationDecision],
    log_negotiation,
) -> list[ReallocationDecision]:
    """Pull applications from overloaded donors, most loaded first."""
    target = _gather_target(initiator, cluster.params)
    active = [d for d in donors if predicted_load(d) > d.bounds.alpha_opt_h]
    active.sort(key=lambda d: (-predicted_load(d), d.server_id))
    pulled: dict[int, list[int]] = {}
    for donor in active:
        while predicted_load(initiator) < target:
            pick = None
            for app in sorted(donor.apps, key=lambda a: (-a.demand, a.app_id)):
                fits = (
                    initiator.load + app.demand <= initiator.bounds.alpha_opt_h
                    and initiator.demand_sum + app.demand <= 1.0
                )
                keeps_donor = predicted_load(donor) - app.demand >= donor.bounds.alpha_opt_l
                if fits and keeps_donor:
                    pick = app
                    break
            if pick is None:
                break
            donor.apps.remove(pick)
            initiator.apps.append(pick)
            pick.home_server = initiator.server_id
            donor.refresh()
            initiator.refresh()
            pulled.setdefault(donor.server_id, []).append(pick.app_id)
            log_negotiation(donor.server_id)
        if predicted_load(initiator) >= target:
            break
    for partner, app_ids in sorted(pulled.items()):
        decisions.append(
            ReallocationDecision(
                kind=DecisionKind.MIGRATE_IN,
                subject_apps=tuple(app_ids),
                partner=partner,
                cost=costs.q * len(app_ids),
            )
        )
    return decisions


def count_violation_apps(server: ServerState) -> int:
    """Apps whose demand cannot be served because the host is overcommitted."""
    if server.demand_sum <= 1.0 + 1e-12:
        return 0
    total = 0.0
    affected = 0
    for app in sorted(server.apps, key=lambda a: a.app_id):
        total += app.demand
        if total > 1.0 + 1e-12:
            affected += 1
    return affected
