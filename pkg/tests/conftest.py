from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from causalgen.graphs import Dag
from causalgen.scm import Cpt, Scm


@pytest.fixture
def running_scm() -> Scm:
    """4-node model used throughout: X1 -> X0 <- X3 -> X1, X3 -> X2 <- X0.

    P(X3=1)=0.9; P(X1=1|X3)=0.3/0.6; P(X0=1|X1,X3)=0.4,0.4,0.8,0.3;
    P(X2=1|X0,X3)=0.7,0.1,0.1,0.9.
    """
    dag = Dag(4, ((0, 2), (1, 0), (3, 0), (3, 1), (3, 2)))
    cpts = (
        Cpt(0, (1, 3), (4, 4, 8, 3), 1),
        Cpt(1, (3,), (3, 6), 1),
        Cpt(2, (0, 3), (7, 1, 1, 9), 1),
        Cpt(3, (), (9,), 1),
    )
    return Scm(dag, cpts, 1)


@pytest.fixture
def mission_scm() -> Scm:
    """4-node deployment model: config and payload drive a collector, payload
    and collector drive mission success.  Nodes: 0=config (1=routine, 97.5%),
    1=payload (12.9%), 2=collector, 3=success.
    """
    dag = Dag(4, ((0, 2), (1, 2), (1, 3), (2, 3)))
    cpts = (
        Cpt(0, (), (975,), 3),
        Cpt(1, (), (129,), 3),
        Cpt(2, (0, 1), (789, 338, 111, 576), 3),
        Cpt(3, (1, 2), (716, 564, 633, 728), 3),
    )
    return Scm(dag, cpts, 3)
