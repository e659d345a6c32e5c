"""Layered tree construction for arbitrary input widths.

Layer 0 is the row of leaf sources; layer k holds ceil(n / 2**k) cells.
Cells keep their slot even when the layer above has odd size and leaves
them with a single parent, so every leaf-to-root path has the same length
and values from different subtrees cannot overtake each other.
"""

from __future__ import annotations

from dataclasses import dataclass

LEAF = "leaf"
CELL = "cell"

# (kind, index): kind is "leaf" (index into the leaf row) or "cell"
# (global cell id in layer-major order).
NodeRef = tuple[str, int]


@dataclass(frozen=True)
class CellNode:
    cell_id: int
    layer: int
    index: int
    left: NodeRef
    right: NodeRef | None


@dataclass(frozen=True)
class TreeTopology:
    n: int
    depth: int
    layer_sizes: tuple[int, ...]
    cells: tuple[CellNode, ...]

    @property
    def root(self) -> CellNode:
        return self.cells[-1]

    @property
    def cell_count(self) -> int:
        return len(self.cells)


def depth_of(n: int) -> int:
    """Number of cell layers between the leaf row and the root.

    ceil(log2(n)) for n >= 2; a lone input still passes through one buffer
    cell, so depth_of(1) is 1 and first-output latency never drops to 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 1
    return (n - 1).bit_length()


def cell_count_of(n: int) -> int:
    """Total cells of the padded tree: sum of ceil(n / 2**k) over layers."""
    return sum(-(-n // (1 << k)) for k in range(1, depth_of(n) + 1))


def build_tree(n: int) -> TreeTopology:
    """Build the layered tree for n leaves.

    Cell j of layer k is fed by nodes 2j and 2j+1 of layer k-1; the right
    feed is absent when 2j+1 falls off the end of an odd layer.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    depth = depth_of(n)
    layer_sizes = [n]
    for k in range(1, depth + 1):
        layer_sizes.append(-(-layer_sizes[-1] // 2) if n > 1 else 1)

    cells: list[CellNode] = []
    layer_base = [0]  # first cell id of each cell layer, 1-based layers
    cid = 0
    for k in range(1, depth + 1):
        layer_base.append(cid)
        above = layer_sizes[k - 1]
        for j in range(layer_sizes[k]):
            if k == 1:
                left: NodeRef = (LEAF, 2 * j)
                right: NodeRef | None = (LEAF, 2 * j + 1) if 2 * j + 1 < above else None
            else:
                base = layer_base[k - 1]
                left = (CELL, base + 2 * j)
                right = (CELL, base + 2 * j + 1) if 2 * j + 1 < above else None
            cells.append(CellNode(cid, k, j, left, right))
            cid += 1
    return TreeTopology(n=n, depth=depth, layer_sizes=tuple(layer_sizes), cells=tuple(cells))


def validate_topology(t: TreeTopology) -> list[str]:
    """Check every structural rule; return one message per broken rule."""
    problems: list[str] = []
    n = t.n
    if n < 1:
        return [f"leaf count {n} is not positive"]
    if t.layer_sizes[0] != n:
        problems.append(f"layer 0 has size {t.layer_sizes[0]}, expected {n} leaves")
    expected_depth = depth_of(n)
    if t.depth != expected_depth:
        problems.append(f"depth is {t.depth}, expected {expected_depth}")
    if len(t.layer_sizes) != t.depth + 1:
        problems.append(
            f"{len(t.layer_sizes)} layer sizes recorded for depth {t.depth}"
        )
        return problems
    for k in range(1, t.depth + 1):
        want = -(-n // (1 << k)) if n > 1 else 1
        if t.layer_sizes[k] != want:
            problems.append(f"layer {k} has size {t.layer_sizes[k]}, expected {want}")
    if t.layer_sizes[-1] != 1:
        problems.append(f"last layer has size {t.layer_sizes[-1]}, expected 1")

    by_layer: dict[int, list[CellNode]] = {}
    for node in t.cells:
        by_layer.setdefault(node.layer, []).append(node)
    layer_base = {1: 0}
    cid = 0
    for k in range(1, t.depth + 1):
        layer_base[k] = cid
        nodes = by_layer.get(k, [])
        if len(nodes) != t.layer_sizes[k]:
            problems.append(
                f"layer {k} holds {len(nodes)} cells, expected {t.layer_sizes[k]}"
            )
        cid += t.layer_sizes[k]

    for node in t.cells:
        k, j = node.layer, node.index
        above = t.layer_sizes[k - 1]
        kind = LEAF if k == 1 else CELL
        base = 0 if k == 1 else layer_base[k - 1]
        want_left = (kind, base + 2 * j) if k > 1 else (LEAF, 2 * j)
        if node.left != want_left:
            problems.append(f"cell {node.cell_id}: left parent {node.left} != {want_left}")
        if 2 * j + 1 < above:
            want_right = (kind, base + 2 * j + 1) if k > 1 else (LEAF, 2 * j + 1)
            if node.right != want_right:
                problems.append(
                    f"cell {node.cell_id}: right parent {node.right} != {want_right}"
                )
        elif node.right is not None:
            problems.append(f"cell {node.cell_id}: right parent {node.right} should be absent")

    # Every node of layer k-1 must feed exactly one cell of layer k; with
    # positional pairing that means node i maps to cell i // 2, which must
    # exist even when it ends up with a single parent.
    for k in range(1, t.depth + 1):
        above = t.layer_sizes[k - 1]
        nodes = by_layer.get(k, [])
        fed: set[int] = set()
        for node in nodes:
            fed.add(2 * node.index)
            if node.right is not None:
                fed.add(2 * node.index + 1)
        for i in range(above):
            if i not in fed:
                expect = i // 2
                problems.append(
                    f"layer {k - 1} node {i} feeds nothing: cell {expect} of layer {k}"
                    " is missing or lost its single parent"
                )
    return problems


def format_topology(t: TreeTopology) -> str:
    """Render the tree as one line per cell, for debugging dumps."""
    lines = [
        f"n={t.n} depth={t.depth} cells={t.cell_count} "
        f"layers={','.join(str(s) for s in t.layer_sizes)}"
    ]
    for node in t.cells:
        right = f"{node.right[0]}:{node.right[1]}" if node.right is not None else "-"
        lines.append(
            f"cell {node.cell_id} layer={node.layer} pos={node.index} "
            f"left={node.left[0]}:{node.left[1]} right={right}"
        )
    return "\n".join(lines)
