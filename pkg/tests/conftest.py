import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import multiagent_recourse as mr


@pytest.fixture(scope="session")
def table1():
    return mr.builtin_matrix("table1")


@pytest.fixture(scope="session")
def table2():
    return mr.builtin_matrix("table2")


@pytest.fixture(scope="session")
def table3():
    return mr.builtin_matrix("table3")


@pytest.fixture(scope="session")
def pd1(table1):
    return mr.pd_scm(table1)


@pytest.fixture(scope="session")
def pd2(table2):
    return mr.pd_scm(table2)


@pytest.fixture(scope="session")
def pd3(table3):
    return mr.pd_scm(table3)


def pd_query(scm, principal, factual, feasible, constraints, **kwargs):
    """Two-agent query over a game model with defaults filled in."""
    return mr.RecourseQuery(
        scm=scm,
        principal=principal,
        agents={1: "h1", 2: "h2"},
        factual=factual,
        feasible=feasible,
        constraints=constraints,
        **kwargs,
    )


def build_scm_from_plain(variables, equations):
    """Package-side model from the oracle's plain structures."""
    decls = tuple(mr.VariableDecl(name, kind, domain) for name, kind, domain in variables)
    eqs = tuple(
        mr.StructuralEquation(target, parents, dict(table))
        for target, (parents, table) in equations.items()
    )
    return mr.Scm(decls, eqs)


def plain_clauses_to_engine(clauses):
    out = []
    for clause in clauses:
        kind = clause[0]
        if kind == "pi":
            out.append(mr.PrincipalImprovement(strict=clause[1]))
        elif kind == "sw":
            out.append(mr.SocialWelfare(strict=clause[1]))
        elif kind == "pareto":
            out.append(mr.Pareto())
        elif kind == "threshold":
            out.append(mr.Threshold(clause[1], clause[2], clause[3]))
        elif kind == "plausible":
            out.append(mr.Plausible())
        else:
            raise ValueError(f"unknown plain clause {clause!r}")
    return out
