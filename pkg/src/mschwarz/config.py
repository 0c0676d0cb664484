"""Declarative experiment configuration: strict YAML parsing and builders.

The config is a single YAML tree with nested sections for the problem, the
selection rule, the relaxation variant and outputs.  Unknown keys are errors,
every violation is reported with its path, and serialize/parse round-trips to
an equal config.
"""

import io
from dataclasses import dataclass, field

import numpy as np
import yaml

from .diagonal import DiagonalModel
from .distributions import (
    ExplicitDistribution,
    LogFamilyDistribution,
    PowerLawDistribution,
    TruncatedSchedule,
    uniform_distribution,
)
from .poisson import make_poisson_1d
from .problems import MatrixSchwarzModel
from .solver import (
    DeterministicRule,
    FixedPool,
    GAWRRelaxation,
    GreedyRule,
    GrowingPool,
    PureRelaxation,
    RandomRule,
    SupportPool,
    TwoParamRelaxation,
    cyclic_rule,
)

MAX_SEED = 2 ** 64 - 1


class ConfigError(ValueError):
    """Validation failure(s); ``errors`` lists "path: message" strings."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class _Checker:
    def __init__(self):
        self.errors = []

    def fail(self, path, message):
        self.errors.append(f"{path}: {message}")

    def require_keys(self, node, path, allowed, required=()):
        if not isinstance(node, dict):
            self.fail(path, f"expected a mapping, got {type(node).__name__}")
            return False
        ok = True
        for key in node:
            if key not in allowed:
                # recorded but not fatal: the known keys still get validated
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")
        for key in required:
            if key not in node:
                self.fail(f"{path}.{key}" if path else str(key), "missing required key")
                ok = False
        return ok

    def number(self, node, path, key, lo=None, hi=None, integer=False, required=True, lo_open=False):
        if key not in node:
            if required:
                self.fail(f"{path}.{key}", "missing required key")
            return None
        val = node[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(f"{path}.{key}", f"expected a number, got {val!r}")
            return None
        if integer and not isinstance(val, int):
            self.fail(f"{path}.{key}", f"expected an integer, got {val!r}")
            return None
        if lo is not None and (val <= lo if lo_open else val < lo):
            cmp = ">" if lo_open else ">="
            self.fail(f"{path}.{key}", f"must be {cmp} {lo}, got {val}")
            return None
        if hi is not None and val > hi:
            self.fail(f"{path}.{key}", f"must be <= {hi}, got {val}")
            return None
        return val

    def choice(self, node, path, key, options, required=True):
        if key not in node:
            if required:
                self.fail(f"{path}.{key}", f"missing required key (one of {sorted(options)})")
            return None
        val = node[key]
        if val not in options:
            self.fail(f"{path}.{key}", f"must be one of {sorted(options)}, got {val!r}")
            return None
        return val


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``data`` is the normalized tree."""

    data: dict

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.data == other.data

    # -- builders -----------------------------------------------------------

    def build_model(self):
        prob = self.data["problem"]
        if prob["kind"] == "diagonal":
            return DiagonalModel(prob["coefficients"])
        problem, splitting = make_poisson_1d(prob["n"], prob["splitting"])
        return MatrixSchwarzModel(problem, splitting)

    def build_distribution(self, model):
        fam = self.data["selection"]["family"]
        kind = fam["kind"]
        if kind == "explicit":
            base = ExplicitDistribution(fam["probs"])
        elif kind == "uniform":
            n = fam.get("n")
            if n is None:
                n = model.component_count()
                if n is None:
                    raise ConfigError(["selection.family.n: required for uniform on a lazy model"])
            base = uniform_distribution(n)
        elif kind == "power_law":
            base = PowerLawDistribution(fam["s"])
        else:
            base = LogFamilyDistribution()
        trunc = self.data["selection"].get("truncation")
        if trunc is not None:
            return TruncatedSchedule(base, trunc["D"]), base
        return base, base

    def build_selection(self, model):
        sel = self.data["selection"]
        kind = sel["kind"]
        if kind == "cyclic":
            n = model.component_count()
            if n is None:
                raise ConfigError(["selection.kind: cyclic needs a finite splitting"])
            return cyclic_rule(n)
        if kind == "sequence":
            return DeterministicRule(sel["sequence"])
        if kind == "greedy":
            pool_name = sel.get("pool", "fixed" if model.component_count() else "support_union")
            if model.component_count() is None and pool_name != "support_union":
                raise ConfigError(
                    ["selection.pool: lazy splittings support only support_union pools"]
                )
            pool = {
                "fixed": FixedPool,
                "support_union": SupportPool,
                "growing": GrowingPool,
            }[pool_name]()
            return GreedyRule(sel["beta"], pool)
        schedule, _ = self.build_distribution(model)
        return RandomRule(schedule)

    def build_relaxation(self):
        return {
            "gawr": GAWRRelaxation,
            "pure": PureRelaxation,
            "two_param": TwoParamRelaxation,
        }[self.data["relaxation"]]()


_PROBLEM_KEYS = {"kind", "coefficients", "n", "splitting"}
_SPLITTING_KEYS = {"kind", "block_size", "overlap", "coarse_stride"}
_SELECTION_KEYS = {"kind", "sequence", "beta", "pool", "family", "truncation"}
_FAMILY_KEYS = {"kind", "probs", "s", "n"}
_TOP_KEYS = {
    "problem", "selection", "relaxation", "steps", "trials", "seed",
    "outputs", "bounds", "rate_fit",
}


def _validate_problem(ck, node):
    if not ck.require_keys(node, "problem", _PROBLEM_KEYS, required=("kind",)):
        return
    kind = ck.choice(node, "problem", "kind", {"diagonal", "poisson_1d"})
    if kind == "diagonal":
        for key in ("n", "splitting"):
            if key in node:
                ck.fail(f"problem.{key}", "not valid for diagonal problems")
        coeffs = node.get("coefficients")
        if coeffs is None:
            ck.fail("problem.coefficients", "missing required key")
        elif isinstance(coeffs, dict):
            for i, v in coeffs.items():
                if not isinstance(i, int) or i < 1:
                    ck.fail(f"problem.coefficients.{i}", "indices must be integers >= 1")
                elif isinstance(v, bool) or not isinstance(v, (int, float)):
                    ck.fail(f"problem.coefficients.{i}", f"expected a number, got {v!r}")
        elif isinstance(coeffs, list):
            for k, v in enumerate(coeffs):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    ck.fail(f"problem.coefficients[{k}]", f"expected a number, got {v!r}")
        else:
            ck.fail("problem.coefficients", "expected a list or an index mapping")
    elif kind == "poisson_1d":
        if "coefficients" in node:
            ck.fail("problem.coefficients", "not valid for poisson_1d problems")
        ck.number(node, "problem", "n", lo=1, hi=4096, integer=True)
        split = node.get("splitting")
        if split is None:
            ck.fail("problem.splitting", "missing required key")
        elif ck.require_keys(split, "problem.splitting", _SPLITTING_KEYS, required=("kind",)):
            skind = ck.choice(split, "problem.splitting", "kind",
                              {"overlapping_blocks", "two_level"})
            ck.number(split, "problem.splitting", "block_size", lo=1, integer=True)
            ck.number(split, "problem.splitting", "overlap", lo=0, integer=True, required=False)
            if skind == "two_level":
                ck.number(split, "problem.splitting", "coarse_stride", lo=1, integer=True)
            elif "coarse_stride" in split:
                ck.fail("problem.splitting.coarse_stride",
                        "only valid for two_level splittings")


def _validate_family(ck, node):
    if not ck.require_keys(node, "selection.family", _FAMILY_KEYS, required=("kind",)):
        return
    kind = ck.choice(node, "selection.family", "kind",
                     {"explicit", "uniform", "power_law", "log"})
    if kind == "explicit":
        probs = node.get("probs")
        if not isinstance(probs, list) or not probs:
            ck.fail("selection.family.probs", "expected a nonempty list of probabilities")
        else:
            bad = [p for p in probs if isinstance(p, bool) or not isinstance(p, (int, float)) or p < 0]
            if bad:
                ck.fail("selection.family.probs", f"entries must be numbers >= 0, got {bad[0]!r}")
            elif abs(sum(probs) - 1.0) > 1e-12:
                ck.fail("selection.family.probs", f"must sum to 1, got {sum(probs)!r}")
    elif kind == "uniform":
        ck.number(node, "selection.family", "n", lo=1, integer=True, required=False)
    elif kind == "power_law":
        ck.number(node, "selection.family", "s", lo=0, lo_open=True)
    for key in ("probs", "s", "n"):
        if key in node and key not in {
            "explicit": {"probs"}, "uniform": {"n"}, "power_law": {"s"}, "log": set(),
        }.get(kind, set()):
            ck.fail(f"selection.family.{key}", f"not valid for family kind {kind!r}")


def _validate_selection(ck, node):
    if not ck.require_keys(node, "selection", _SELECTION_KEYS, required=("kind",)):
        return
    kind = ck.choice(node, "selection", "kind", {"cyclic", "sequence", "greedy", "random"})
    if kind == "sequence":
        seq = node.get("sequence")
        if not isinstance(seq, list) or not seq or not all(
            isinstance(i, int) and not isinstance(i, bool) and i >= 1 for i in seq
        ):
            ck.fail("selection.sequence", "expected a nonempty list of indices >= 1")
    elif "sequence" in node:
        ck.fail("selection.sequence", "only valid for sequence selection")
    if kind == "greedy":
        beta = ck.number(node, "selection", "beta", lo=0, lo_open=True)
        if beta is not None and beta > 1.0:
            ck.fail("selection.beta", f"must lie in (0, 1], got {beta}")
        ck.choice(node, "selection", "pool", {"fixed", "support_union", "growing"},
                  required=False)
    else:
        for key in ("beta", "pool"):
            if key in node:
                ck.fail(f"selection.{key}", "only valid for greedy selection")
    if kind == "random":
        fam = node.get("family")
        if fam is None:
            ck.fail("selection.family", "missing required key")
        else:
            _validate_family(ck, fam)
        trunc = node.get("truncation")
        if trunc is not None and ck.require_keys(
            trunc, "selection.truncation", {"D"}, required=("D",)
        ):
            ck.number(trunc, "selection.truncation", "D", lo=0, lo_open=True)
    else:
        for key in ("family", "truncation"):
            if key in node:
                ck.fail(f"selection.{key}", "only valid for random selection")


def parse_config(text):
    """Parse and validate a YAML experiment config.

    Raises :class:`ConfigError` listing every violation with its path.
    """
    try:
        raw = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        raise ConfigError([f"<yaml>: {exc}"]) from exc
    ck = _Checker()
    if not isinstance(raw, dict):
        raise ConfigError([f"<root>: expected a mapping, got {type(raw).__name__}"])
    ck.require_keys(raw, "", _TOP_KEYS,
                    required=("problem", "selection", "relaxation", "steps", "seed"))
    if "problem" in raw:
        _validate_problem(ck, raw["problem"])
    if "selection" in raw:
        _validate_selection(ck, raw["selection"])
    if "relaxation" in raw and raw["relaxation"] not in {"gawr", "pure", "two_param"}:
        ck.fail("relaxation", f"must be one of ['gawr', 'pure', 'two_param'], got {raw.get('relaxation')!r}")
    ck.number(raw, "", "steps", lo=0, integer=True)
    ck.number(raw, "", "trials", lo=1, integer=True, required=False)
    ck.number(raw, "", "seed", lo=0, hi=MAX_SEED, integer=True)
    if "outputs" in raw and ck.require_keys(raw["outputs"], "outputs", {"trace", "summary"}):
        for key, val in raw["outputs"].items():
            if not isinstance(val, str):
                ck.fail(f"outputs.{key}", f"expected a path string, got {val!r}")
    if "bounds" in raw and not isinstance(raw["bounds"], bool):
        ck.fail("bounds", f"expected true/false, got {raw['bounds']!r}")
    if "rate_fit" in raw and ck.require_keys(raw["rate_fit"], "rate_fit", {"lo", "hi"},
                                             required=("lo", "hi")):
        lo = ck.number(raw["rate_fit"], "rate_fit", "lo", lo=0, integer=True)
        hi = ck.number(raw["rate_fit"], "rate_fit", "hi", lo=0, integer=True)
        if lo is not None and hi is not None and hi < lo:
            ck.fail("rate_fit.hi", f"must be >= rate_fit.lo, got {hi} < {lo}")
    if ck.errors:
        raise ConfigError(ck.errors)
    data = dict(raw)
    data.setdefault("trials", 1)
    data.setdefault("bounds", False)
    return ExperimentConfig(data)


def serialize(config):
    """Canonical YAML text for a config; parse(serialize(c)) == c."""
    return yaml.safe_dump(config.data, sort_keys=True, default_flow_style=False)
