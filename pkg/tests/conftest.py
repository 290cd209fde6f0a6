import numpy as np

from h2sync.graph import CommGraph


def random_spanning_tree_graph(rng, n_agents):
    """Random weighted digraph guaranteed to contain a directed spanning
    tree: a random arborescence from a random root plus extra edges."""
    adj = np.zeros((n_agents, n_agents))
    order = rng.permutation(n_agents)
    root = order[0]
    for k in range(1, n_agents):
        parent = order[rng.integers(0, k)]
        child = order[k]
        adj[child, parent] = rng.uniform(0.1, 2.0)
    n_extra = rng.integers(0, 2 * n_agents)
    for _ in range(n_extra):
        i, j = rng.integers(0, n_agents, size=2)
        if i != j:
            adj[i, j] = rng.uniform(0.1, 2.0)
    return CommGraph(adj), root
