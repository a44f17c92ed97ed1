import itertools
import random

import pytest

from pqgrams.ted import EditCostTable, tree_edit_distance
from pqgrams.tree import parse_tree, tree_size

from conftest import random_tree_raw, tree_from_parents
from oracles import ted_exhaustive


def test_identical_trees():
    t = parse_tree("a(b(c),d)")
    assert tree_edit_distance(t, t) == 0.0


def test_single_relabel():
    assert tree_edit_distance(parse_tree("a"), parse_tree("b")) == 1.0


def test_swapped_children():
    assert tree_edit_distance(parse_tree("a(b,c)"), parse_tree("a(c,b)")) == 2.0


def test_insert_and_delete():
    assert tree_edit_distance(parse_tree("a"), parse_tree("a(b)")) == 1.0
    assert tree_edit_distance(parse_tree("a(b)"), parse_tree("a")) == 1.0
    assert tree_edit_distance(parse_tree("a(b(c))"), parse_tree("a")) == 2.0


def test_cost_table_validation():
    with pytest.raises(ValueError):
        EditCostTable(insert=-1.0)
    with pytest.raises(ValueError):
        EditCostTable(delete=-0.5)


def test_asymmetric_costs():
    cheap_insert = EditCostTable(insert=0.25, delete=1.0)
    assert tree_edit_distance(parse_tree("a"), parse_tree("a(b,c)"), cheap_insert) == 0.5
    assert tree_edit_distance(parse_tree("a(b,c)"), parse_tree("a"), cheap_insert) == 2.0


def all_trees_up_to(n_max, labels=("a", "b")):
    """Every tree shape with <= n_max nodes over the given labels."""
    shapes = {1: [[]]}  # parent arrays, node 0 is the root
    for n in range(2, n_max + 1):
        shapes[n] = [
            parents + [p]
            for parents in shapes[n - 1]
            for p in range(n - 1)
        ]
    out = []
    for n, plist in shapes.items():
        for parents in plist:
            for labs in itertools.product(labels, repeat=n):
                out.append(tree_from_parents(parents, list(labs)))
    return out


def test_matches_exhaustive_mapping_search_on_small_trees():
    # sampled pairs here; the acceptance suite sweeps all pairs up to 5 nodes
    trees = all_trees_up_to(3)
    rng = random.Random(0)
    pairs = [(rng.choice(trees), rng.choice(trees)) for _ in range(120)]
    for t1, t2 in pairs:
        assert tree_edit_distance(t1, t2) == ted_exhaustive(t1, t2)


def test_matches_exhaustive_on_random_four_node_trees():
    rng = random.Random(1)
    for _ in range(60):
        t1 = random_tree_raw(rng.randrange(1, 5), rng)
        t2 = random_tree_raw(rng.randrange(1, 5), rng)
        assert tree_edit_distance(t1, t2) == ted_exhaustive(t1, t2)


def test_metric_axioms_on_random_triples():
    rng = random.Random(2)
    for _ in range(100):
        x = random_tree_raw(rng.randrange(1, 16), rng)
        y = random_tree_raw(rng.randrange(1, 16), rng)
        z = random_tree_raw(rng.randrange(1, 16), rng)
        dxy = tree_edit_distance(x, y)
        dyx = tree_edit_distance(y, x)
        dyz = tree_edit_distance(y, z)
        dxz = tree_edit_distance(x, z)
        assert dxy >= 0.0
        assert tree_edit_distance(x, x) == 0.0
        assert dxy == dyx
        assert dxy + dyz >= dxz


def test_delete_all_insert_all_bound():
    rng = random.Random(3)
    for _ in range(50):
        t1 = random_tree_raw(rng.randrange(1, 16), rng)
        t2 = random_tree_raw(rng.randrange(1, 16), rng)
        assert tree_edit_distance(t1, t2) <= tree_size(t1) + tree_size(t2)
