"""Normal form for iteration-free substitutions.

A substitution is flattened into a decision tree whose inner nodes are
preconditions, conditionals and probabilistic choices, and whose leaves are
simultaneous assignments ``{var: expr}`` with every right-hand side written
over the *pre*-state.  Both the expectation transformer and the translator
work on this tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Collection, Dict, Mapping, Tuple

from . import ast as A


class UnsupportedConstruct(Exception):
    """Raised for substitutions outside the supported pGSL fragment."""


class Tree:
    __slots__ = ()


@dataclass(frozen=True)
class Leaf(Tree):
    updates: Tuple[Tuple[str, A.Expr], ...]

    def as_dict(self) -> Dict[str, A.Expr]:
        return dict(self.updates)


@dataclass(frozen=True)
class Guard(Tree):
    """Precondition: the subtree only applies where ``cond`` holds."""

    cond: A.Expr
    body: Tree


@dataclass(frozen=True)
class Cond(Tree):
    cond: A.Expr
    then: Tree
    other: Tree


@dataclass(frozen=True)
class Choice(Tree):
    prob: A.Expr
    left: Tree
    right: Tree


def _leaf(d: Mapping[str, A.Expr]) -> Leaf:
    return Leaf(tuple(d.items()))


def _map_leaves(tree: Tree, fn: Callable[[Leaf], Tree]) -> Tree:
    if isinstance(tree, Leaf):
        return fn(tree)
    if isinstance(tree, Guard):
        return Guard(tree.cond, _map_leaves(tree.body, fn))
    if isinstance(tree, Cond):
        return Cond(tree.cond, _map_leaves(tree.then, fn), _map_leaves(tree.other, fn))
    return Choice(tree.prob, _map_leaves(tree.left, fn), _map_leaves(tree.right, fn))


def _subst_tree(tree: Tree, b: Mapping[str, A.Expr]) -> Tree:
    """Rewrite every expression of ``tree`` as seen from an earlier state."""
    if isinstance(tree, Leaf):
        return Leaf(tuple((v, A.substitute(e, b)) for v, e in tree.updates))
    if isinstance(tree, Guard):
        return Guard(A.substitute(tree.cond, b), _subst_tree(tree.body, b))
    if isinstance(tree, Cond):
        return Cond(A.substitute(tree.cond, b), _subst_tree(tree.then, b), _subst_tree(tree.other, b))
    return Choice(A.substitute(tree.prob, b), _subst_tree(tree.left, b), _subst_tree(tree.right, b))


def parallel(t1: Tree, t2: Tree) -> Tree:
    def merge_into(leaf1: Leaf) -> Tree:
        def merge(leaf2: Leaf) -> Tree:
            d = leaf1.as_dict()
            for v, e in leaf2.updates:
                if v in d:
                    raise UnsupportedConstruct(f"variable '{v}' assigned twice in a parallel composition")
                d[v] = e
            return _leaf(d)

        return _map_leaves(t2, merge)

    return _map_leaves(t1, merge_into)


def sequential(t1: Tree, t2: Tree) -> Tree:
    def follow(leaf1: Leaf) -> Tree:
        b = leaf1.as_dict()

        def merge(leaf2: Leaf) -> Tree:
            d = dict(b)
            d.update(leaf2.updates)
            return _leaf(d)

        return _map_leaves(_subst_tree(t2, b), merge)

    return _map_leaves(t1, follow)


def normalize(sub: A.Substitution, outputs: Collection[str] = ()) -> Tree:
    """Flatten ``sub`` into its normal-form tree.

    Inside a parallel composition, assignments to the operation's ``outputs``
    observe the state produced by the other components, so
    ``S || out := e`` behaves as ``S ; out := e``.
    """
    if isinstance(sub, A.Skip):
        return _leaf({})
    if isinstance(sub, A.Assign):
        if len(sub.targets) != len(sub.values):
            raise UnsupportedConstruct("assignment arity mismatch")
        if len(set(sub.targets)) != len(sub.targets):
            raise UnsupportedConstruct("variable assigned twice in a multiple assignment")
        return _leaf(dict(zip(sub.targets, sub.values)))
    if isinstance(sub, A.Parallel):
        if outputs:
            late = [p for p in sub.parts if _only_outputs(p, outputs)]
            early = [p for p in sub.parts if not _only_outputs(p, outputs)]
            if late and early:
                first = normalize(A.Parallel(tuple(early)), outputs) if len(early) > 1 else normalize(early[0], outputs)
                then = _leaf({})
                for p in late:
                    then = parallel(then, normalize(p, outputs))
                return sequential(first, then)
        tree = _leaf({})
        for p in sub.parts:
            tree = parallel(tree, normalize(p, outputs))
        return tree
    if isinstance(sub, A.Sequence):
        tree = _leaf({})
        for p in sub.parts:
            tree = sequential(tree, normalize(p, outputs))
        return tree
    if isinstance(sub, A.Block):
        return normalize(sub.body, outputs)
    if isinstance(sub, A.Pre):
        return Guard(sub.cond, normalize(sub.body, outputs))
    if isinstance(sub, A.PChoice):
        return Choice(sub.prob, normalize(sub.left, outputs), normalize(sub.right, outputs))
    if isinstance(sub, A.If):
        return Cond(sub.cond, normalize(sub.left, outputs), normalize(sub.right, outputs))
    raise UnsupportedConstruct(f"unsupported substitution {type(sub).__name__}")


def _only_outputs(sub: A.Substitution, outputs: Collection[str]) -> bool:
    assigned = A.assigned_variables(sub)
    return bool(assigned) and assigned <= set(outputs)


def transform(tree: Tree, post: A.Expr) -> A.Expr:
    """Pre-expectation of ``post`` through ``tree``, as an expression."""
    if isinstance(tree, Leaf):
        return A.substitute(post, tree.as_dict())
    if isinstance(tree, Guard):
        return A.Assume(tree.cond, transform(tree.body, post))
    if isinstance(tree, Cond):
        return A.Ite(tree.cond, transform(tree.then, post), transform(tree.other, post))
    return A.ProbChoice(tree.prob, transform(tree.left, post), transform(tree.right, post))


def guards(tree: Tree) -> Tuple[A.Expr, ...]:
    """Preconditions on the path to the first non-guard node."""
    out = []
    while isinstance(tree, Guard):
        out.append(tree.cond)
        tree = tree.body
    return tuple(out)
