"""
Verification utilities.

``verify_document`` re-derives everything a stored document claims; a
staged family with a lowering certificate must reproduce every certificate
integer. ``run_suite`` runs the invariant checks of the whole toolkit on
small reference systems.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config import RunConfig, settings
from app.core.dimensional import (
    bridge_check,
    hB_bisect,
    hB_laws_check,
    language_tree,
    single_branch,
    typical_tree,
    verify_nonuniform_mdp,
    verify_uniform_mdp,
)
from app.core.entropy import growth_estimate, h_star_profile, separated_count, sft_entropy_exact
from app.core.errors import EntropyError, VerificationFailed
from app.core.factors import SlidingBlockCode, natural_extension, sandwich_check, sandwich_survey, surjective_augmentation
from app.core.fan import FanSet, fan_apex_family
from app.core.lowering import (
    LoweringCertificate,
    PointSource,
    fan_estimate,
    fan_lower,
    floor_exp,
    lemma_good_lower,
    stage_bounds,
    zero_entropy_infinite,
)
from app.core.measures import ProductMeasure
from app.core.subsets import (
    CylinderTree,
    FinitePointSet,
    StagedFamily,
    SubshiftSet,
    random_finite_set,
    random_tree,
    validate_staged,
)
from app.core.symbolic import BiInfinitePoint, Subshift, bowen_distance, separation_window
from app.store.files import load_spec

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def verify_staged(F: StagedFamily) -> List[CheckResult]:
    """Structure of the family, then every integer of its certificate."""
    diagnostics = validate_staged(F)
    results = [CheckResult("structure", diagnostics.ok, diagnostics.failure or ", ".join(diagnostics.checked))]
    cert = F.certificate
    if not isinstance(cert, LoweringCertificate):
        return results
    lengths_ok = tuple(cert.lengths) == tuple(F.lengths)
    results.append(CheckResult("lengths", lengths_ok, f"{list(cert.lengths)}"))
    floors = tuple(floor_exp(l, cert.target) for l in F.lengths)
    results.append(CheckResult("floors", floors == tuple(cert.floors), f"recomputed {list(floors)}"))
    cumulative = tuple(itertools.accumulate(stage.size for stage in F.stages))
    results.append(CheckResult("cumulative", cumulative == tuple(cert.cumulative), f"recomputed {list(cumulative)}"))
    results.append(CheckResult("identity", cert.identity_ok, "|A_i| = floor(e^(l_i h)) + i"))
    if cert.bounds:
        bounds = stage_bounds(F, replace(cert, bounds=()))
        results.append(CheckResult("bounds", bounds == tuple(cert.bounds), f"{sum(b.between_checked for b in bounds)} horizons between stages"))
        results.append(CheckResult("bounds-hold", all(b.ok for b in bounds), ""))
    return results


def verify_document(path: Union[str, Path]) -> List[CheckResult]:
    obj = load_spec(path)
    if isinstance(obj, StagedFamily):
        return verify_staged(obj)
    if isinstance(obj, FanSet):
        parts = [p for p in obj.parts.values() if isinstance(p, StagedFamily)]
        return [r for p in parts for r in verify_staged(p)] or [CheckResult("parse", True, "fan set")]
    return [CheckResult("parse", True, type(obj).__name__)]


# invariant suite

def _require(condition: bool, detail: object = "") -> None:
    if not condition:
        raise VerificationFailed(str(detail))


def _distances(points: Sequence[BiInfinitePoint], n: int) -> Dict[Tuple[int, int], Fraction]:
    return {(i, j): bowen_distance(points[i], points[j], n) for i, j in itertools.combinations(range(len(points)), 2)}


def _brute_separated(size_of: int, d: Dict[Tuple[int, int], Fraction], eps: float) -> int:
    for size in range(size_of, 0, -1):
        for subset in itertools.combinations(range(size_of), size):
            if all(d[pair] > eps for pair in itertools.combinations(subset, 2)):
                return size
    return 0


def _brute_spanning(size_of: int, d: Dict[Tuple[int, int], Fraction], eps: float) -> int:
    def close(i: int, j: int) -> bool:
        return i == j or d[(min(i, j), max(i, j))] <= eps

    for size in range(1, size_of + 1):
        for centers in itertools.combinations(range(size_of), size):
            if all(any(close(x, c) for c in centers) for x in range(size_of)):
                return size
    return 0


def _check_entropies(config: RunConfig) -> str:
    full, golden = Subshift.full(2), Subshift.golden_mean()
    _require(abs(sft_entropy_exact(full) - math.log(2)) <= 1e-9)
    _require(abs(sft_entropy_exact(golden) - math.log((1 + math.sqrt(5)) / 2)) <= 1e-9)
    est = growth_estimate(SubshiftSet(full), 2, 20).value
    _require(abs(est - math.log(2)) <= 1e-3, est)
    gest = growth_estimate(SubshiftSet(golden), 2, 24).value
    _require(abs(gest - 0.481212) <= 0.01, gest)
    return f"full-2 {est:.6f}, golden mean {gest:.6f}"


def _check_separated_spanning(config: RunConfig) -> str:
    rng = np.random.default_rng(config.seed)
    full = Subshift.full(2)
    for _ in range(30):
        K = random_finite_set(full, 5, rng)
        points = K.sorted_points()
        for n in range(1, 9):
            d = _distances(points, n)
            for m in (1, 2, 3):
                eps = 2.0 ** -m
                s = separated_count(K, n, m)
                _require(s == _brute_separated(len(points), d, eps) == _brute_spanning(len(points), d, eps), (n, m))
    return "30 random sets, n <= 8, m <= 3"


def _check_lemma(config: RunConfig) -> str:
    src = PointSource(Subshift.full(2), BiInfinitePoint.constant(0), 2)
    out = []
    for h in (0.2, math.log(2) / 2, 0.6):
        F, cert = lemma_good_lower(src, h, max_stages=config.max_stages, max_horizon=config.max_horizon)
        _require(cert.ok and len(F.stages) >= 5, (h, F.lengths))
        value = growth_estimate(F, 2, F.horizon).value
        _require(abs(value - h) <= config.estimate_tol, (h, value))
        out.append(f"{h:.4f}->{value:.4f}")
    return ", ".join(out)


def _check_zero(config: RunConfig) -> str:
    src = PointSource(Subshift.full(2), BiInfinitePoint.constant(0), 2)
    h_init = 0.6
    F = zero_entropy_infinite(src, h_init)
    _require(F.open_tail and validate_staged(F).ok, "zero-entropy family")
    for m in range(2, F.resolution + 1):
        counts = [F.window_count(separation_window(l, m)) for l in F.lengths]
        _require(counts == list(range(2, len(F.lengths) + 2)), (m, counts))
        envelope = all(math.log(s) / l <= h_init / k for k, (s, l) in enumerate(zip(counts, F.lengths), start=1))
        _require(envelope, (m, counts, F.lengths))
    values = [growth_estimate(F, m, 20).value for m in range(2, F.resolution + 1)]
    _require(max(values) < config.estimate_tol, values)
    return f"{len(F.lengths)} representatives up to l={F.lengths[-1]}, max slope {max(values):.4f}"


def _check_bridge(config: RunConfig) -> str:
    rng = np.random.default_rng(config.seed)
    for i in range(50):
        depth = 12 + i % 3
        _require(bridge_check(random_tree(Subshift.full(2), depth, rng)).ok, f"tree {i} of depth {depth}")
    report = bridge_check(language_tree(Subshift.full(2), 12))
    chain = (report.hB_low, report.cover_slope, report.separated_slope)
    _require(report.ok and all(abs(v - math.log(2)) <= 1e-6 for v in chain), chain)
    return "50 random trees of depth 12 to 14 and the full tree"


def _check_laws(config: RunConfig) -> str:
    full = Subshift.full(2)
    zeros = CylinderTree(0, 12, frozenset(w for w in full.language(12) if w[0] == 0), full)
    ones = single_branch((1,) * 12, full)
    report = hB_laws_check([zeros, ones], 2)
    _require(report.union_ok and report.power_ok, report)
    whole = language_tree(full, 12)
    for m in (2, 3):
        nested = hB_laws_check([whole, single_branch((0,) * 12, full)], m)
        _require(nested.union_exact and nested.power_exact, (m, nested))
    _require(hB_bisect(ones).lambda_low == 0.0)
    return f"union excess {report.union_excess:.6f} on a disjoint pair, exact on nested ones"


def _check_mass(config: RunConfig) -> str:
    rng = np.random.default_rng(config.seed)
    fair = ProductMeasure.bernoulli([0.5, 0.5])
    for _ in range(20):
        report = verify_uniform_mdp(fair, random_tree(Subshift.full(2), 10, rng), 1.0, math.log(2))
        _require(report.holds and report.ok)
    report = verify_nonuniform_mdp(ProductMeasure.bernoulli([0.7, 0.3]), typical_tree(0.3, 16, 0.05), 0.5)
    _require(report.ok, report)
    return f"typical tree h^B >= {report.estimate:.4f}"


def _check_sandwich(config: RunConfig) -> str:
    code = SlidingBlockCode.modulo(4, 2)
    full4 = Subshift.full(4)
    whole = sandwich_check(code, SubshiftSet(full4), 2, 16)
    _require(abs(whole.fiber_value - math.log(2)) <= 1e-9)
    _require(abs(whole.set_value - whole.image_value - whole.fiber_value) <= 1e-6 and whole.ok)
    rng = np.random.default_rng(config.seed)
    trees = [random_tree(full4, 10, rng, base=-1) for _ in range(20)]
    reports, worst, fiber = sandwich_survey(code, trees, 2, 8)
    _require(all(r.ok for r in reports) and worst <= fiber + config.estimate_tol)
    return f"worst defect {worst:.4f} against fiber {fiber:.4f}"


def _check_fan(config: RunConfig) -> str:
    profile = h_star_profile("fan", range(1, 7))
    _require(all(e.value >= math.log(2) - 0.01 for _, e in profile), [round(e.value, 4) for _, e in profile])
    ball = Subshift.full(2)
    points = frozenset({BiInfinitePoint.constant(0), BiInfinitePoint.constant(1), BiInfinitePoint.periodic((0, 1))})
    apex = fan_apex_family({n: FinitePointSet(points, ball) for n in range(1, 9)})
    apex_values = [growth_estimate(apex, m, 4 * m + 4).value for m in range(1, 7)]
    _require(max(apex_values) <= config.estimate_tol, apex_values)
    whole = FanSet.whole()
    hits = []
    for h in (0.0, 0.3, 0.5, math.log(2)):
        value = fan_estimate(fan_lower(whole, h)).value
        _require(abs(value - h) <= config.estimate_tol, (h, value))
        hits.append(f"{value:.3f}")
    return f"apex family slope {max(apex_values):.4f}, targets hit: " + ", ".join(hits)


def _check_extensions(config: RunConfig) -> str:
    for s in (Subshift.full(2), Subshift.golden_mean()):
        _require(natural_extension(s).check(n_max=20).ok, s.label)
    aug = surjective_augmentation(Subshift.full(2)).estimate(2)
    _require(abs(aug.value - math.log(2)) <= 1e-3 and abs(aug.upper - math.log(2)) <= 1e-3, aug)
    return f"augmented slope {aug.value:.6f}"


SUITE: List[tuple] = [
    ("exact-entropies", _check_entropies),
    ("separated-equals-spanning", _check_separated_spanning),
    ("lemma-certificates", _check_lemma),
    ("zero-entropy-extraction", _check_zero),
    ("bridge-chain", _check_bridge),
    ("dimensional-laws", _check_laws),
    ("mass-distribution", _check_mass),
    ("sandwich", _check_sandwich),
    ("fan", _check_fan),
    ("extensions", _check_extensions),
]


def run_suite(config: Optional[RunConfig] = None, only: Optional[Sequence[str]] = None) -> List[CheckResult]:
    config = config or settings.run_config()
    results = []
    for name, check in SUITE:
        if only and name not in only:
            continue
        results.append(_run(name, check, config))
    return results


def _run(name: str, check: Callable[[RunConfig], str], config: RunConfig) -> CheckResult:
    try:
        detail = check(config)
        result = CheckResult(name, True, detail)
    except VerificationFailed as exc:
        result = CheckResult(name, False, f"check failed: {exc}")
    except EntropyError as exc:
        result = CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    except Exception as exc:
        logger.exception("check %s crashed", name)
        result = CheckResult(name, False, f"unexpected {type(exc).__name__}: {exc}")
    logger.info("check %s: %s %s", name, "ok" if result.ok else "FAILED", result.detail)
    return result
