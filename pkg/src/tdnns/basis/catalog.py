"""Common catalog plumbing: entity-tagged blocks of shape functions."""

from __future__ import annotations

from dataclasses import dataclass

#: canonical ordering of entity kinds inside a catalog
_ENTITY_RANK = {"vertex": 0, "edge": 1, "face": 2, "interior": 3}


def entity_sort_key(entity: tuple[str, int]) -> tuple[int, int]:
    kind, index = entity
    return (_ENTITY_RANK[kind], index)


@dataclass(frozen=True)
class Block:
    """Contiguous run [start, stop) of catalog functions tied to one entity."""

    entity: tuple[str, int]
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


def build_blocks(tagged: dict[tuple[str, int], int]) -> list[Block]:
    """Blocks in canonical entity order from an entity -> count mapping."""
    blocks = []
    start = 0
    for entity in sorted(tagged, key=entity_sort_key):
        count = tagged[entity]
        blocks.append(Block(entity, start, start + count))
        start += count
    return blocks


def group_functions(items: list[tuple[tuple[str, int], object]]):
    """Stable-sort (entity, payload) pairs into canonical entity order.

    Returns the ordered payload list and the block table.  The relative order
    of payloads within one entity is preserved, so within-block enumeration
    stays in construction order.
    """
    items = sorted(items, key=lambda it: entity_sort_key(it[0]))
    counts: dict[tuple[str, int], int] = {}
    for entity, _ in items:
        counts[entity] = counts.get(entity, 0) + 1
    return [payload for _, payload in items], build_blocks(counts)
