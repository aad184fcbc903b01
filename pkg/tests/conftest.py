import pytest

from pipesched import ComputeGraph, NodeAttr, Schedule


def make_graph(specs, edges):
    """specs: list of (name, param_bytes, out_bytes)."""
    nodes = [NodeAttr(i, name, p, t) for i, (name, p, t) in enumerate(specs)]
    return ComputeGraph(nodes, edges)


def chain_graph(params, outs=None):
    outs = outs or [1] * len(params)
    specs = [(f"n{i}", p, t) for i, (p, t) in enumerate(zip(params, outs))]
    return make_graph(specs, [(i, i + 1) for i in range(len(params) - 1)])


@pytest.fixture
def relax_fixture():
    """Two-branch graph with a 2-stage coarse schedule whose crossing edges
    are relu1->conv1, conv2->add, and concat->add; the crossing sources start
    at level 2 and the deepest crossing sink (add) is at level 4."""
    g = make_graph(
        [
            ("start", 0, 0),      # 0, level 0
            ("conv0", 10, 4),     # 1, level 1
            ("pool0", 2, 4),      # 2, level 1
            ("relu1", 1, 8),      # 3, level 2
            ("concat", 1, 8),     # 4, level 2
            ("conv1", 12, 4),     # 5, level 3
            ("conv2", 9, 4),      # 6, level 3
            ("add", 1, 4),        # 7, level 4
            ("relu3", 1, 4),      # 8, level 5
            ("end", 0, 0),        # 9, level 6
        ],
        [(0, 1), (0, 2), (1, 3), (1, 4), (2, 4), (3, 5), (4, 6), (4, 7), (6, 7), (5, 7), (7, 8), (8, 9)],
    )
    s = Schedule(2, {0: 0, 1: 0, 2: 0, 3: 0, 4: 0, 6: 0, 5: 1, 7: 1, 8: 1, 9: 1})
    return g, s


@pytest.fixture
def two_schedule_fixture():
    """Eleven-node graph with two valid 3-stage schedules differing only in
    where conv2 sits. Tensor sizes encode element counts 1:1 as bytes; the
    stage-1 -> stage-2 crossings sum to 10240 (conv2 on stage 1) versus 9216
    (conv2 on stage 2)."""
    g = make_graph(
        [
            ("start", 0, 0),          # 0
            ("input1", 0, 4096),      # 1
            ("input2", 0, 4096),      # 2
            ("batchnorm", 64, 1024),  # 3   out [2,2,256]
            ("relu", 16, 4096),       # 4   out [2,2,1024]
            ("conv1", 9000, 4096),    # 5   out [2,2,1024]
            ("conv2", 4000, 2048),    # 6   out [2,2,512]
            ("conv3", 9000, 4096),    # 7
            ("zeropad", 8, 2048),     # 8
            ("avgpad", 8, 1024),      # 9
            ("end", 0, 0),            # 10
        ],
        [(0, 1), (0, 2), (1, 3), (2, 4), (3, 6), (4, 5), (4, 9), (5, 7), (6, 8), (7, 10), (8, 10), (9, 10)],
    )
    left = Schedule(3, {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1, 6: 1, 7: 2, 8: 2, 9: 2, 10: 2})
    right = Schedule(3, {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1, 6: 2, 7: 2, 8: 2, 9: 2, 10: 2})
    return g, left, right


@pytest.fixture
def diamond():
    #     0
    #    / \
    #   1   2
    #    \ /
    #     3
    return make_graph(
        [("a", 1, 4), ("b", 8, 4), ("c", 8, 4), ("d", 1, 4)],
        [(0, 1), (0, 2), (1, 3), (2, 3)],
    )
