"""Tree-ensemble model: features, trees, prediction, loading and variant reductions.

All three supported ensemble kinds (majority-vote and weighted-vote random
forests, boosted trees) share one representation: every leaf carries a vector
of per-class weights and the score of a class is the sum of the weights of the
leaves reached by an instance, one leaf per tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence, Union

REAL, CATEGORICAL, BINARY = "real", "categorical", "binary"
RFMV, RFWV, BT = "rfmv", "rfwv", "bt"
VARIANTS = (RFMV, RFWV, BT)
FEATURE_KINDS = (REAL, CATEGORICAL, BINARY)


class ModelError(ValueError):
    """Base class for problems with a model document."""


class ModelParseError(ModelError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ModelValidationError(ModelError):
    pass


class InstanceError(ValueError):
    pass


class Threshold(NamedTuple):
    """Upper bound of a real-valued test.

    ``Threshold(d, False)`` stands for ``x < d``; ``Threshold(d, True)`` for
    ``x <= d``, i.e. ``x < d+`` where ``d+`` is the successor of ``d``.  Tuple
    ordering matches the ordering of the bounds on the real line.
    """

    value: Fraction
    inclusive: bool = False

    def admits(self, x) -> bool:
        return x < self.value or (self.inclusive and x == self.value)

    def __str__(self) -> str:
        return fmt_number(self.value) + ("+" if self.inclusive else "")


@dataclass(frozen=True)
class Feature:
    index: int
    name: str
    kind: str
    domain: tuple  # (lo, hi) for real, value tuple otherwise

    @property
    def lo(self) -> Fraction:
        return self.domain[0]

    @property
    def hi(self) -> Fraction:
        return self.domain[-1]


@dataclass(frozen=True)
class Split:
    """Node test on one feature: ``x < t`` (real), ``x in S`` (categorical) or ``x = 1`` (binary)."""

    feature: int
    op: str
    threshold: Threshold | None = None
    values: frozenset | None = None

    def holds(self, x) -> bool:
        if self.op == "<":
            return self.threshold.admits(x)
        if self.op == "in":
            return x in self.values
        return x == 1


@dataclass(frozen=True)
class Leaf:
    weights: tuple  # of Fraction, one per class

    def top_class(self) -> int:
        return max(range(len(self.weights)), key=lambda k: (self.weights[k], -k))


@dataclass(frozen=True)
class Internal:
    test: Split
    true: "Node"
    false: "Node"

    @property
    def feature(self) -> int:
        return self.test.feature


Node = Union[Internal, Leaf]
PathStep = tuple  # (Split, branch taken: bool)


@dataclass(frozen=True)
class Tree:
    root: Node
    id: int = 0

    def leaf_for(self, v: Sequence) -> Leaf:
        node = self.root
        while isinstance(node, Internal):
            node = node.true if node.test.holds(v[node.test.feature]) else node.false
        return node

    def paths(self) -> Iterator[tuple[tuple[PathStep, ...], Leaf]]:
        """Yield every root-to-leaf path as (steps, leaf), true branch first."""
        stack = [(self.root, ())]
        while stack:
            node, path = stack.pop()
            if isinstance(node, Leaf):
                yield path, node
            else:
                stack.append((node.false, path + ((node.test, False),)))
                stack.append((node.true, path + ((node.test, True),)))

    def depth(self) -> int:
        return max(len(p) for p, _ in self.paths())


@dataclass(frozen=True)
class Ensemble:
    features: tuple
    classes: tuple
    trees: tuple
    variant: str

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def feature_index(self, name_or_index) -> int:
        if isinstance(name_or_index, int):
            return name_or_index
        for f in self.features:
            if f.name == name_or_index:
                return f.index
        raise KeyError(name_or_index)


def class_scores(e: Ensemble, v: Sequence) -> tuple:
    """Exact per-class sums of the leaf weights selected by ``v``."""
    scores = [Fraction(0)] * e.n_classes
    for tree in e.trees:
        for k, w in enumerate(tree.leaf_for(v).weights):
            scores[k] += w
    return tuple(scores)


def argmax_lowest(scores: Sequence) -> int:
    best = 0
    for k in range(1, len(scores)):
        if scores[k] > scores[best]:
            best = k
    return best


def predict(e: Ensemble, v: Sequence) -> int:
    """Predicted class index; ties go to the lowest index."""
    return argmax_lowest(class_scores(e, v))


# ---------------------------------------------------------------- instances


def parse_instance(e: Ensemble, values: Sequence) -> tuple:
    """Convert raw values (strings or numbers) to a validated instance tuple."""
    if len(values) != e.n_features:
        raise InstanceError(f"expected {e.n_features} values, got {len(values)}")
    out = []
    for f, raw in zip(e.features, values):
        if f.kind == REAL:
            try:
                x = to_fraction(raw)
            except (ValueError, TypeError, ZeroDivisionError):
                raise InstanceError(f"{f.name}: not a number: {raw!r}") from None
            if not f.lo <= x <= f.hi:
                raise InstanceError(f"{f.name}: {raw} outside [{fmt_number(f.lo)}, {fmt_number(f.hi)}]")
        elif f.kind == BINARY:
            if str(raw).strip() in ("0", "1", "0.0", "1.0", "False", "True", "false", "true"):
                x = 1 if str(raw).strip() in ("1", "1.0", "True", "true") else 0
            else:
                raise InstanceError(f"{f.name}: binary value must be 0 or 1, got {raw!r}")
        else:
            x = _match_category(f, raw)
        out.append(x)
    return tuple(out)


def _match_category(f: Feature, raw):
    if raw in f.domain:
        return raw
    for value in f.domain:
        if str(value) == str(raw).strip():
            return value
    raise InstanceError(f"{f.name}: {raw!r} not in {list(f.domain)}")


def check_instance(e: Ensemble, v: Sequence) -> None:
    parse_instance(e, v)


# ------------------------------------------------------------------ numbers


def to_fraction(x) -> Fraction:
    if isinstance(x, bool):
        raise TypeError("boolean is not a number")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Decimal)):
        return Fraction(x)
    if isinstance(x, float):
        # floats only reach us from in-memory callers; round-trip via repr
        return Fraction(Decimal(repr(x)))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"not a number: {x!r}")


def fmt_number(x: Fraction) -> str:
    """Shortest exact decimal rendering, falling back to ``p/q``."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(twos, fives)
    digits = abs(x.numerator) * 10**places // x.denominator
    sign = "-" if x < 0 else ""
    text = str(digits).rjust(places + 1, "0")
    return f"{sign}{text[:-places]}.{text[-places:]}".rstrip("0").rstrip(".")


# ------------------------------------------------------------------- loading


def load_model(document: str | dict) -> Ensemble:
    """Parse a JSON model document (text or already-decoded mapping)."""
    if isinstance(document, str):
        try:
            document = json.loads(document, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise ModelParseError("$", f"invalid JSON: {exc}") from None
    return _Loader(document).run()


def load_model_file(path: str | Path) -> Ensemble:
    return load_model(Path(path).read_text())


class _Loader:
    def __init__(self, doc):
        self.doc = doc

    def fail(self, path, message):
        raise ModelParseError(path, message)

    def run(self) -> Ensemble:
        doc = self.doc
        if not isinstance(doc, dict):
            self.fail("$", "top level must be an object")
        for key in ("classes", "features", "variant", "trees"):
            if key not in doc:
                self.fail("$", f"missing field '{key}'")
        classes = doc["classes"]
        if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
            self.fail("$.classes", "expected an array of strings")
        if len(classes) < 2:
            raise ModelValidationError("at least two classes are required")
        if len(set(classes)) != len(classes):
            raise ModelValidationError("class names must be distinct")
        self.classes = tuple(classes)
        variant = doc["variant"]
        if variant not in VARIANTS:
            self.fail("$.variant", f"expected one of {list(VARIANTS)}, got {variant!r}")
        self.variant = variant

        if not isinstance(doc["features"], list):
            self.fail("$.features", "expected an array")
        self.features = tuple(self.feature(i, f) for i, f in enumerate(doc["features"]))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ModelValidationError("feature names must be distinct")
        if not self.features:
            raise ModelValidationError("at least one feature is required")

        trees = doc["trees"]
        if not isinstance(trees, list):
            self.fail("$.trees", "expected an array")
        if not trees:
            raise ModelValidationError("the ensemble has no trees")
        built = tuple(self.tree(i, t) for i, t in enumerate(trees))
        e = Ensemble(self.features, self.classes, built, variant)
        validate(e)
        return e

    def feature(self, i, f) -> Feature:
        path = f"$.features[{i}]"
        if not isinstance(f, dict):
            self.fail(path, "expected an object")
        name = f.get("name")
        if not isinstance(name, str):
            self.fail(path + ".name", "expected a string")
        kind = f.get("kind", REAL)
        if kind not in FEATURE_KINDS:
            self.fail(path + ".kind", f"expected one of {list(FEATURE_KINDS)}")
        dom = f.get("domain")
        if kind == REAL:
            if not isinstance(dom, list) or len(dom) != 2:
                self.fail(path + ".domain", "expected [lo, hi]")
            lo, hi = (self.number(path + f".domain[{j}]", x) for j, x in enumerate(dom))
            if not lo < hi:
                raise ModelValidationError(f"{path}: empty domain [{lo}, {hi}]")
            domain = (lo, hi)
        elif kind == BINARY:
            domain = (0, 1)
        else:
            if not isinstance(dom, list) or not dom:
                self.fail(path + ".domain", "expected a non-empty array of values")
            domain = tuple(_plain(x) for x in dom)
            if len(set(domain)) != len(domain):
                raise ModelValidationError(f"{path}: repeated categorical value")
        return Feature(i, name, kind, domain)

    def number(self, path, x) -> Fraction:
        try:
            return to_fraction(x)
        except (TypeError, ValueError, ZeroDivisionError):
            self.fail(path, f"expected a number, got {x!r}")

    def tree(self, i, t) -> Tree:
        path = f"$.trees[{i}]"
        default_class = None
        if isinstance(t, dict) and "root" in t:
            if "class" in t:
                default_class = self.class_index(path + ".class", t["class"])
            t = t["root"]
            path += ".root"
        return Tree(self.node(path, t, default_class), i)

    def class_index(self, path, c) -> int:
        if isinstance(c, str) and c in self.classes:
            return self.classes.index(c)
        if isinstance(c, int) and not isinstance(c, bool) and 0 <= c < len(self.classes):
            return c
        self.fail(path, f"unknown class {c!r}")

    def node(self, path, node, default_class) -> Node:
        if not isinstance(node, dict):
            self.fail(path, "expected an object")
        if "leaf" in node:
            return self.leaf(path + ".leaf", node["leaf"], default_class)
        if "feature" not in node:
            self.fail(path, "node needs either 'leaf' or 'feature'")
        feat = node["feature"]
        try:
            fi = feat if isinstance(feat, int) and not isinstance(feat, bool) else [f.name for f in self.features].index(feat)
            f = self.features[fi]
        except (ValueError, IndexError):
            self.fail(path + ".feature", f"unknown feature {feat!r}")
        op = node.get("op", "<" if f.kind == REAL else "in" if f.kind == CATEGORICAL else "=1")
        if f.kind == REAL:
            if op not in ("<", "<="):
                self.fail(path + ".op", f"real feature needs '<' or '<=', got {op!r}")
            if "threshold" not in node:
                self.fail(path, "missing 'threshold'")
            d = self.number(path + ".threshold", node["threshold"])
            test = Split(fi, "<", threshold=Threshold(d, op == "<="))
        elif f.kind == CATEGORICAL:
            if op != "in":
                self.fail(path + ".op", f"categorical feature needs 'in', got {op!r}")
            vals = node.get("set")
            if not isinstance(vals, list):
                self.fail(path + ".set", "expected an array of values")
            vals = frozenset(_plain(x) for x in vals)
            if not vals <= set(f.domain):
                self.fail(path + ".set", "values outside the feature domain")
            test = Split(fi, "in", values=vals)
        else:
            if op != "=1":
                self.fail(path + ".op", f"binary feature needs '=1', got {op!r}")
            test = Split(fi, "=1")
        for side in ("true", "false"):
            if side not in node:
                self.fail(path, f"missing '{side}' child")
        return Internal(
            test,
            self.node(path + ".true", node["true"], default_class),
            self.node(path + ".false", node["false"], default_class),
        )

    def leaf(self, path, w, default_class) -> Leaf:
        K = len(self.classes)
        if isinstance(w, str) and w in self.classes:
            vec = [Fraction(0)] * K
            vec[self.classes.index(w)] = Fraction(1)
            return Leaf(tuple(vec))
        if isinstance(w, list):
            if len(w) != K:
                raise ModelValidationError(f"{path}: leaf has {len(w)} weights, expected {K}")
            return Leaf(tuple(self.number(f"{path}[{j}]", x) for j, x in enumerate(w)))
        if default_class is not None:
            vec = [Fraction(0)] * K
            vec[default_class] = self.number(path, w)
            return Leaf(tuple(vec))
        self.fail(path, "expected a weight array, a class name, or a scalar inside a tree with 'class'")


def _plain(x):
    if isinstance(x, Decimal):
        return int(x) if x == x.to_integral_value() else float(x)
    return x


def validate(e: Ensemble) -> None:
    """Raise ModelValidationError unless ``e`` meets the structural invariants."""
    K = len(e.classes)
    if K < 2:
        raise ModelValidationError("at least two classes are required")
    if not e.trees:
        raise ModelValidationError("the ensemble has no trees")
    for t in e.trees:
        for path, leaf in t.paths():
            if len(leaf.weights) != K:
                raise ModelValidationError(f"tree {t.id}: leaf with {len(leaf.weights)} weights, expected {K}")
            if e.variant == RFMV and sorted(leaf.weights) != [0] * (K - 1) + [1]:
                raise ModelValidationError(f"tree {t.id}: majority-vote leaves must be one-hot with weight 1")
            if e.variant == BT and sum(1 for w in leaf.weights if w != 0) > 1:
                raise ModelValidationError(f"tree {t.id}: boosted-tree leaves must be one-hot")
            for test, _ in path:
                f = e.features[test.feature]
                if test.op == "<":
                    d, incl = test.threshold
                    if not (f.lo < d < f.hi or (incl and d == f.lo)):
                        raise ModelValidationError(
                            f"tree {t.id}: threshold {fmt_number(d)} not inside the domain of {f.name}"
                        )
                elif test.op == "in":
                    if not test.values or test.values >= set(f.domain):
                        raise ModelValidationError(f"tree {t.id}: degenerate set test on {f.name}")


# ------------------------------------------------------------------- dumping


def ensemble_to_dict(e: Ensemble) -> dict:
    def num(x):
        return fmt_number(x)

    def node(n):
        if isinstance(n, Leaf):
            return {"leaf": [num(w) for w in n.weights]}
        t = n.test
        out = {"feature": e.features[t.feature].name}
        if t.op == "<":
            out["op"] = "<=" if t.threshold.inclusive else "<"
            out["threshold"] = num(t.threshold.value)
        elif t.op == "in":
            out["op"] = "in"
            out["set"] = sorted(t.values, key=str)
        else:
            out["op"] = "=1"
        out["true"] = node(n.true)
        out["false"] = node(n.false)
        return out

    def feature(f):
        if f.kind == REAL:
            return {"name": f.name, "kind": REAL, "domain": [num(f.lo), num(f.hi)]}
        if f.kind == BINARY:
            return {"name": f.name, "kind": BINARY}
        return {"name": f.name, "kind": CATEGORICAL, "domain": list(f.domain)}

    return {
        "classes": list(e.classes),
        "features": [feature(f) for f in e.features],
        "variant": e.variant,
        "trees": [node(t.root) for t in e.trees],
    }


def dump_model(e: Ensemble) -> str:
    return json.dumps(ensemble_to_dict(e), indent=1)


# ---------------------------------------------------------------- reductions


def _map_leaves(node: Node, fn) -> Node:
    if isinstance(node, Leaf):
        return fn(node)
    return Internal(node.test, _map_leaves(node.true, fn), _map_leaves(node.false, fn))


def _prune_zero(node: Node, K: int) -> Node:
    """Collapse every subtree whose leaves all carry the zero vector."""
    if isinstance(node, Leaf):
        return node
    t, f = _prune_zero(node.true, K), _prune_zero(node.false, K)
    zero = Leaf((Fraction(0),) * K)
    if t == zero and f == zero:
        return zero
    return Internal(node.test, t, f)


def reduce_rfmv_to_bt(e: Ensemble) -> Ensemble:
    """Majority-vote forest as a boosted ensemble of n*K one-class trees.

    Tree ``K*t + k`` scores 1 for class k wherever tree t votes k, and 0
    elsewhere; all-zero subtrees are pruned to a single leaf.
    """
    if e.variant != RFMV:
        raise ValueError("reduce_rfmv_to_bt expects a majority-vote forest")
    K = e.n_classes
    trees = []
    for t in e.trees:
        for k in range(K):
            def one_class(leaf, k=k):
                vec = [Fraction(0)] * K
                vec[k] = leaf.weights[k]
                return Leaf(tuple(vec))

            root = _prune_zero(_map_leaves(t.root, one_class), K)
            trees.append(Tree(root, len(trees)))
    return Ensemble(e.features, e.classes, tuple(trees), BT)


def reduce_rfmv_to_rfwv(e: Ensemble) -> Ensemble:
    """Majority-vote forest read as a weighted-vote one with the same trees.

    One-hot leaves already are per-class weight vectors, so the scores and the
    predictions carry over unchanged.
    """
    if e.variant != RFMV:
        raise ValueError("reduce_rfmv_to_rfwv expects a majority-vote forest")
    return Ensemble(e.features, e.classes, e.trees, RFWV)


def reduce_rfwv_to_unified(e: Ensemble) -> Ensemble:
    """Weighted-vote forest as n*K trees with one-hot leaves (scores unscaled)."""
    if e.variant != RFWV:
        raise ValueError("reduce_rfwv_to_unified expects a weighted-vote forest")
    K = e.n_classes
    trees = []
    for t in e.trees:
        for k in range(K):
            def one_class(leaf, k=k):
                vec = [Fraction(0)] * K
                vec[k] = leaf.weights[k]
                return Leaf(tuple(vec))

            trees.append(Tree(_map_leaves(t.root, one_class), len(trees)))
    return Ensemble(e.features, e.classes, tuple(trees), BT)


def to_unified(e: Ensemble) -> Ensemble:
    """Weighted form usable by the objective encoder, whatever the variant."""
    if e.variant == RFMV:
        return reduce_rfmv_to_bt(e)
    if e.variant == RFWV:
        return reduce_rfwv_to_unified(e)
    return e


def bundled_model_path(name: str) -> Path:
    """Path of a model shipped with the package (e.g. ``iris_bt``)."""
    return Path(__file__).parent / "data" / f"{name}.json"


def load_bundled(name: str) -> Ensemble:
    return load_model_file(bundled_model_path(name))
