"""Graph-building shorthand shared by the test modules."""

from coronakit import exprgraph


def power_fragment(*factors):
    """Mul over Pow(Var) children; factors are (name, exponent) pairs."""
    b = exprgraph.GraphBuilder()
    head = b.node(exprgraph.MUL)
    for name, exp in factors:
        p = b.node(exprgraph.POW)
        v = b.node(exprgraph.VAR, name)
        b.edge(head, p, exp)
        b.edge(p, v, 1.0)
    return b.fragment(head)


def log_fragment(base, *factors):
    """Mul wrapping a single log of a power product."""
    b = exprgraph.GraphBuilder()
    head = b.node(exprgraph.MUL)
    log_node = b.node(exprgraph.LOG)
    b.edge(head, log_node, base)
    arg = b.node(exprgraph.MUL)
    b.edge(log_node, arg, 1.0)
    for name, exp in factors:
        p = b.node(exprgraph.POW)
        v = b.node(exprgraph.VAR, name)
        b.edge(arg, p, exp)
        b.edge(p, v, 1.0)
    return b.fragment(head)


def const_fragment():
    b = exprgraph.GraphBuilder()
    return b.fragment(b.node(exprgraph.CONST))


def graph_of(*terms):
    """Assemble a root-add graph from (coefficient, fragment) pairs."""
    return exprgraph.from_terms([(frag, coef) for coef, frag in terms])
