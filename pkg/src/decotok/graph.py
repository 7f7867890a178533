"""Word co-occurrence graph over the vocabulary.

An undirected edge joins two vocabulary entries whenever their tokens
appear within a 5-token window (|position difference| < window) in one
caption; every node carries a self-loop.  The graph is stored as a
sorted edge list and exposed as a symmetrically-normalized sparse matrix
D^{-1/2} A D^{-1/2} for graph-convolution propagation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch

from .captions import CaptionCorpus
from .errors import FormatError
from .vocab import Vocabulary


@dataclass
class CooccurrenceGraph:
    n_nodes: int
    # Unique undirected edges as (u, v) with u <= v; includes all self-loops.
    edges: list[tuple[int, int]]
    window: int

    def adjacency(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        """Dense symmetric 0/1 adjacency with self-loops (small graphs only)."""
        a = torch.zeros(self.n_nodes, self.n_nodes, dtype=dtype)
        for u, v in self.edges:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def normalized_adjacency(self, dtype: torch.dtype = torch.float32,
                             ) -> torch.Tensor:
        """Sparse D^{-1/2} A D^{-1/2} over the self-looped adjacency."""
        rows, cols = [], []
        for u, v in self.edges:
            rows.append(u)
            cols.append(v)
            if u != v:
                rows.append(v)
                cols.append(u)
        idx = torch.tensor([rows, cols], dtype=torch.long)
        deg = torch.zeros(self.n_nodes, dtype=torch.float64)
        deg.scatter_add_(0, idx[0], torch.ones(idx.shape[1], dtype=torch.float64))
        inv_sqrt = deg.clamp(min=1.0).rsqrt()
        vals = (inv_sqrt[idx[0]] * inv_sqrt[idx[1]]).to(dtype)
        return torch.sparse_coo_tensor(idx, vals,
                                       (self.n_nodes, self.n_nodes)).coalesce()


def build_graph(corpus: CaptionCorpus, vocab: Vocabulary,
                window: int = 5) -> CooccurrenceGraph:
    """Enumerate co-occurring in-vocabulary pairs per caption.

    Positions count every caption token, including out-of-vocabulary
    ones, so filler words still separate their neighbours.
    """
    edges = {(i, i) for i in range(len(vocab))}
    for _, tokens in corpus.records:
        ids = [vocab.index_of(t.word, t.pos) for t in tokens]
        for a in range(len(ids)):
            if ids[a] is None:
                continue
            for b in range(a + 1, min(a + window, len(ids))):
                if ids[b] is None:
                    continue
                u, v = sorted((ids[a], ids[b]))
                edges.add((u, v))
    return CooccurrenceGraph(n_nodes=len(vocab), edges=sorted(edges),
                             window=window)


def graph_to_text(graph: CooccurrenceGraph) -> str:
    lines = [f"# nodes={graph.n_nodes} window={graph.window}"]
    lines += [f"{u}\t{v}" for u, v in graph.edges]
    return "\n".join(lines) + "\n"


def save_graph(graph: CooccurrenceGraph, path: str | Path) -> None:
    Path(path).write_text(graph_to_text(graph), encoding="utf-8")


def load_graph(path: str | Path) -> CooccurrenceGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return graph_from_text(text, source=str(path))


def graph_from_text(text: str, source: str = "<text>") -> CooccurrenceGraph:
    path = source
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}: missing graph header")
    header = dict(item.split("=") for item in lines[0][1:].split())
    try:
        n_nodes = int(header["nodes"])
        window = int(header["window"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad graph header {lines[0]!r}") from exc
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            u, v = (int(x) for x in line.split("\t"))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad edge line") from exc
        if not (0 <= u <= v < n_nodes):
            raise FormatError(f"{path}:{lineno}: edge ({u},{v}) out of range")
        edges.append((u, v))
    return CooccurrenceGraph(n_nodes=n_nodes, edges=edges, window=window)
