"""Synthetic layered population: households, schools, workplaces, community.

The three static layers are full cliques within groups whose sizes are chosen
so the mean within-group contact count matches the configured layer contact
means. The community layer is not built here; it is resampled every simulated
day as random pairings (see simulator.Simulation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PopulationConfig, age_band
from .errors import ConfigurationError

LAYER_NAMES = ("household", "school", "work")


@dataclass
class Layer:
    """Directed edge list for one static contact layer.

    src/dst hold both directions of every undirected contact, so
    "contacts of agent i" is exactly ``dst[src == i]``.
    """

    name: str
    src: np.ndarray
    dst: np.ndarray

    def neighbors_of(self, agent_id: int) -> np.ndarray:
        lo = np.searchsorted(self.src, agent_id, side="left")
        hi = np.searchsorted(self.src, agent_id, side="right")
        return self.dst[lo:hi]


@dataclass
class Population:
    """Static attributes of the synthesized agents."""

    ages: np.ndarray          # int16, years
    age_bands: np.ndarray     # int8, ten-year band index
    household_id: np.ndarray  # int32
    school_id: np.ndarray     # int32, -1 when not enrolled
    work_id: np.ndarray       # int32, -1 when not employed
    layers: dict[str, Layer]  # household/school/work edge lists

    @property
    def size(self) -> int:
        return len(self.ages)


def _partition_into_groups(members: np.ndarray, mean_contacts: float, rng: np.random.Generator) -> np.ndarray:
    """Assign members to groups with mean size ~ mean_contacts + 1.

    Members are shuffled, then split into ``max(1, round(n / target))``
    near-equal contiguous groups. Returns a group index per member, aligned
    with the input order.
    """
    n = len(members)
    group_of = np.empty(n, dtype=np.int64)
    if n == 0:
        return group_of
    target = mean_contacts + 1.0
    n_groups = max(1, int(round(n / target)))
    order = rng.permutation(n)
    bounds = np.linspace(0, n, n_groups + 1).astype(np.int64)
    for g in range(n_groups):
        group_of[order[bounds[g]:bounds[g + 1]]] = g
    return group_of


def _clique_edges(members_by_group: dict[int, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Both-direction edge arrays for full cliques within each group."""
    srcs: list[np.ndarray] = []
    dsts: list[np.ndarray] = []
    for ids in members_by_group.values():
        k = len(ids)
        if k < 2:
            continue
        a, b = np.triu_indices(k, k=1)
        srcs.append(ids[a])
        dsts.append(ids[b])
    if not srcs:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    u = np.concatenate(srcs)
    v = np.concatenate(dsts)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.argsort(src, kind="stable")
    return src[order], dst[order]


def _group_members(ids: np.ndarray, group_of: np.ndarray) -> dict[int, np.ndarray]:
    out: dict[int, np.ndarray] = {}
    for g in np.unique(group_of):
        out[int(g)] = ids[group_of == g]
    return out


def synthesize_population(config: PopulationConfig, seed_rng: np.random.Generator) -> Population:
    """Build the layered population for one simulation run.

    Ages come from the configured pyramid (uniform within each ten-year
    band). Everyone gets a household; agents aged [school_age_min,
    school_age_max) get a school group; agents in [school_age_max,
    work_age_max) get a workplace group. Deterministic given the generator
    state.
    """
    config.validate()
    n = config.pop_size
    if n < 2:
        raise ConfigurationError("pop_size must be >= 2")

    bands = seed_rng.choice(len(config.age_pyramid), size=n, p=np.asarray(config.age_pyramid))
    ages = (bands * 10 + seed_rng.integers(0, 10, size=n)).astype(np.int16)

    all_ids = np.arange(n, dtype=np.int64)
    household_group = _partition_into_groups(all_ids, config.contacts_h, seed_rng)
    household_id = household_group.astype(np.int32)

    school_mask = (ages >= config.school_age_min) & (ages < config.school_age_max)
    school_ids_arr = np.full(n, -1, dtype=np.int32)
    school_members = all_ids[school_mask]
    school_group = _partition_into_groups(school_members, config.contacts_s, seed_rng)
    school_ids_arr[school_members] = school_group.astype(np.int32)

    work_mask = (ages >= config.school_age_max) & (ages < config.work_age_max)
    work_ids_arr = np.full(n, -1, dtype=np.int32)
    work_members = all_ids[work_mask]
    work_group = _partition_into_groups(work_members, config.contacts_w, seed_rng)
    work_ids_arr[work_members] = work_group.astype(np.int32)

    layers = {}
    for name, ids, groups in (
        ("household", all_ids, household_group),
        ("school", school_members, school_group),
        ("work", work_members, work_group),
    ):
        src, dst = _clique_edges(_group_members(ids, groups))
        layers[name] = Layer(name=name, src=src, dst=dst)

    return Population(
        ages=ages,
        age_bands=age_band(ages).astype(np.int8),
        household_id=household_id,
        school_id=school_ids_arr,
        work_id=work_ids_arr,
        layers=layers,
    )
