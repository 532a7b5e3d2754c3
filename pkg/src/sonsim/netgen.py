"""Synthesis of the semantic overlay network.

Generation order matters: domains and super-peer expertise first, then friend
links with expertise duplication (which is the only source of inter-community
overlap, because each domain draws couples from its own token partition), then
peers as subsets of their super-peer's final expertise. The correspondence
matrix always equals the recomputed pairwise expertise intersections.
"""

from __future__ import annotations

import dataclasses
import math
import string
from dataclasses import dataclass, field
from random import Random

from .config import Config, substream
from .model import Expertise, ExpertiseElement, PeerId, SuperPeerId

DomainLabel = str


@dataclass(frozen=True)
class SuperPeer:
    id: SuperPeerId
    domain: DomainLabel
    expertise: Expertise
    friends: frozenset[SuperPeerId]
    members: frozenset[PeerId]


@dataclass(frozen=True)
class Peer:
    id: PeerId
    expertise: Expertise
    super_peer: SuperPeerId


class CorrespondenceMatrix:
    """Symmetric ``(i, j) -> shared expertise element count`` over super-peers.

    Only nonzero entries are stored; keys are normalized to ``i < j``.
    """

    def __init__(self, entries: dict[tuple[int, int], int] | None = None):
        self._entries: dict[tuple[int, int], int] = {}
        for (i, j), count in (entries or {}).items():
            if count:
                self._entries[(min(i, j), max(i, j))] = count

    @classmethod
    def from_expertise(cls, expertise_by_sp: dict[SuperPeerId, Expertise]) -> "CorrespondenceMatrix":
        ids = sorted(expertise_by_sp)
        entries = {}
        for a, i in enumerate(ids):
            for j in ids[a + 1:]:
                shared = len(expertise_by_sp[i] & expertise_by_sp[j])
                if shared:
                    entries[(i, j)] = shared
        return cls(entries)

    def entry(self, i: SuperPeerId, j: SuperPeerId) -> int:
        return self._entries.get((min(i, j), max(i, j)), 0)

    def without(self, sp_id: SuperPeerId) -> "CorrespondenceMatrix":
        return CorrespondenceMatrix(
            {pair: c for pair, c in self._entries.items() if sp_id not in pair}
        )

    def pairs(self):
        """Nonzero entries as sorted ((i, j), count) tuples."""
        return sorted(self._entries.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, CorrespondenceMatrix) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"CorrespondenceMatrix({self._entries!r})"


@dataclass(frozen=True)
class Network:
    """The full overlay: every peer belongs to exactly one community, and the
    inter-community structure lives in friend links plus the correspondence
    matrix."""

    peers: dict[PeerId, Peer]
    super_peers: dict[SuperPeerId, SuperPeer]
    cormat: CorrespondenceMatrix
    config: Config
    seed: int
    # Derived lookup tables for the routers; rebuilt on construction.
    members_index: dict[SuperPeerId, tuple[tuple[PeerId, Expertise], ...]] = field(
        init=False, repr=False, compare=False
    )
    element_index: dict[ExpertiseElement, tuple[PeerId, ...]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        members_index = {}
        for spid in sorted(self.super_peers):
            sp = self.super_peers[spid]
            members_index[spid] = tuple(
                (pid, self.peers[pid].expertise) for pid in sorted(sp.members)
            )
        holders: dict[ExpertiseElement, list[PeerId]] = {}
        for pid in sorted(self.peers):
            for element in self.peers[pid].expertise:
                holders.setdefault(element, []).append(pid)
        element_index = {element: tuple(pids) for element, pids in holders.items()}
        object.__setattr__(self, "members_index", members_index)
        object.__setattr__(self, "element_index", element_index)


def generate_domains(nsp: int, rng: Random) -> list[DomainLabel]:
    """Draw nsp pairwise-distinct two-letter domain labels."""
    if nsp < 1:
        raise ValueError("need at least one domain")
    labels: list[DomainLabel] = []
    seen = set()
    while len(labels) < nsp:
        label = "".join(rng.choice(string.ascii_lowercase) for _ in range(2))
        if label not in seen:
            seen.add(label)
            labels.append(label)
    return labels


def generate_sp_expertise(domain: DomainLabel, size: int, rng: Random,
                          vocab_size: int | None = None) -> Expertise:
    """Draw `size` distinct couples over the domain's own token partition.

    Tokens are "<domain><k>", so couples from different domains can never
    collide before duplication. The token pool defaults to the smallest one
    that admits `size` distinct couples.
    """
    if size < 1:
        raise ValueError("expertise size must be >= 1")
    if vocab_size is None:
        vocab_size = math.isqrt(size)
        if vocab_size * vocab_size < size:
            vocab_size += 1
    if vocab_size * vocab_size < size:
        raise ValueError(
            f"vocabulary of {vocab_size} tokens yields only {vocab_size * vocab_size} "
            f"distinct couples, {size} requested"
        )
    tokens = [f"{domain}{k}" for k in range(vocab_size)]
    couples = [ExpertiseElement(a, b) for a in tokens for b in tokens]
    return frozenset(rng.sample(couples, size))


def link_friends_and_duplicate(net: Network, friends_per_sp: int, dup_count: int,
                               rng: Random) -> Network:
    """Select friends per super-peer and duplicate expertise across each link.

    Friendship is recorded symmetrically. Duplicating dup_count elements into
    every chosen friend guarantees each friend pair shares at least dup_count
    elements, i.e. a mapping exists between them.
    """
    sps = net.super_peers
    nsp = len(sps)
    if friends_per_sp >= nsp:
        raise ValueError(f"friends_per_sp must be < number of super-peers ({nsp})")
    if dup_count < 1:
        raise ValueError("dup_count must be >= 1 so friend links carry a mapping")
    smallest = min(len(sp.expertise) for sp in sps.values())
    if dup_count > smallest:
        raise ValueError(f"dup_count {dup_count} exceeds smallest expertise size {smallest}")

    expertise = {spid: set(sps[spid].expertise) for spid in sorted(sps)}
    friends: dict[int, set[int]] = {spid: set(sps[spid].friends) for spid in sorted(sps)}
    for spid in sorted(sps):
        others = [j for j in sorted(sps) if j != spid]
        for friend in rng.sample(others, friends_per_sp):
            shared = rng.sample(sorted(expertise[spid]), dup_count)
            expertise[friend].update(shared)
            friends[spid].add(friend)
            friends[friend].add(spid)

    new_sps = {
        spid: dataclasses.replace(
            sps[spid],
            expertise=frozenset(expertise[spid]),
            friends=frozenset(friends[spid]),
        )
        for spid in sps
    }
    cormat = CorrespondenceMatrix.from_expertise(
        {spid: sp.expertise for spid, sp in new_sps.items()}
    )
    return Network(peers=dict(net.peers), super_peers=new_sps, cormat=cormat,
                   config=net.config, seed=net.seed)


def generate_peer_expertise(sp: SuperPeer, min_size: int, rng: Random) -> Expertise:
    """Uniform random subset of the super-peer's expertise, size in
    [min_size, |expertise|]. Keeps every peer semantically inside its community."""
    available = sorted(sp.expertise)
    if len(available) < min_size:
        raise ValueError(
            f"super-peer {sp.id} expertise ({len(available)}) smaller than MIN ({min_size})"
        )
    size = rng.randint(min_size, len(available))
    return frozenset(rng.sample(available, size))


def build_son(config: Config, rng: Random | None = None) -> Network:
    """End-to-end network synthesis: domains, super-peer expertise, friend
    links with duplication, then peers attached round-robin."""
    config.validate()
    if rng is None:
        rng = substream(config.seed, "network")

    domains = generate_domains(config.nsp, rng)
    sps = {
        spid: SuperPeer(
            id=spid,
            domain=domains[spid],
            expertise=generate_sp_expertise(domains[spid], config.sp_expertise_size, rng),
            friends=frozenset(),
            members=frozenset(),
        )
        for spid in range(config.nsp)
    }
    net = Network(peers={}, super_peers=sps, cormat=CorrespondenceMatrix(),
                  config=config, seed=config.seed)
    net = link_friends_and_duplicate(net, config.friends_per_sp, config.dup_count, rng)

    peers: dict[int, Peer] = {}
    members: dict[int, set[int]] = {spid: set() for spid in range(config.nsp)}
    for pid in range(config.np):
        spid = pid % config.nsp
        expertise = generate_peer_expertise(net.super_peers[spid],
                                            config.min_peer_expertise, rng)
        peers[pid] = Peer(id=pid, expertise=expertise, super_peer=spid)
        members[spid].add(pid)

    final_sps = {
        spid: dataclasses.replace(sp, members=frozenset(members[spid]))
        for spid, sp in net.super_peers.items()
    }
    return Network(peers=peers, super_peers=final_sps, cormat=net.cormat,
                   config=config, seed=config.seed)


def trust(net: Network, i: SuperPeerId, j: SuperPeerId) -> int:
    """Shared-expertise count between two distinct super-peers."""
    if i == j:
        raise ValueError("trust is defined between distinct super-peers")
    for spid in (i, j):
        if spid not in net.super_peers:
            raise ValueError(f"unknown super-peer {spid}")
    return net.cormat.entry(i, j)


def sp_departure(net: Network, leaving: SuperPeerId) -> Network:
    """Remove a super-peer; its members re-attach to the remaining super-peer
    it trusts most (ties broken by lowest id)."""
    if leaving not in net.super_peers:
        raise ValueError(f"unknown super-peer {leaving}")
    if len(net.super_peers) < 2:
        raise ValueError("the last remaining super-peer cannot depart")

    remaining = sorted(spid for spid in net.super_peers if spid != leaving)
    target = min(remaining, key=lambda j: (-net.cormat.entry(leaving, j), j))

    orphans = net.super_peers[leaving].members
    peers = {
        pid: dataclasses.replace(p, super_peer=target) if pid in orphans else p
        for pid, p in net.peers.items()
    }
    sps = {}
    for spid in remaining:
        sp = net.super_peers[spid]
        new_members = sp.members | orphans if spid == target else sp.members
        sps[spid] = dataclasses.replace(
            sp, friends=sp.friends - {leaving}, members=new_members
        )
    return Network(peers=peers, super_peers=sps, cormat=net.cormat.without(leaving),
                   config=net.config, seed=net.seed)


def serialize_network(net: Network) -> str:
    """Human-readable dump of the whole network; byte-stable under a fixed
    seed, which the determinism tests rely on."""
    lines = ["sonsim-network 1", "[config]"]
    lines.extend(net.config.to_text().splitlines())
    lines.append("[super-peers]")
    for spid in sorted(net.super_peers):
        sp = net.super_peers[spid]
        friends = ",".join(str(f) for f in sorted(sp.friends)) or "-"
        expertise = ",".join(e.render() for e in sorted(sp.expertise))
        lines.append(f"sp {spid} domain={sp.domain} friends={friends} expertise={expertise}")
    lines.append("[peers]")
    for pid in sorted(net.peers):
        peer = net.peers[pid]
        expertise = ",".join(e.render() for e in sorted(peer.expertise))
        lines.append(f"peer {pid} sp={peer.super_peer} expertise={expertise}")
    lines.append("[cormat]")
    for (i, j), count in net.cormat.pairs():
        lines.append(f"{i} {j} {count}")
    return "\n".join(lines) + "\n"
