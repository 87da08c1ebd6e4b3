#%%
"""Case orchestration: configuration, the elementary identities behind the reduction to
a unit equation, the staged run for one exponent and its certificate."""
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Callable, Literal, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator
from sympy import integer_nthroot, primefactors

from utils.arith import DEFAULT_PRECISION, PRECISION_CEILING, FibPowersError
from utils.bounds import CaseConstants, CaseSelector, b_threshold, case_constants, linear_form_data
from utils.lll import (
    DEFAULT_SIGMA_CAP,
    ReductionInputs,
    reduce_to_fixpoint,
    sigma_ladder,
)
from utils.numberfield import load_unit_system, number_field, verify_unit_system
from utils.polynomial import build_fn, certify_irreducible, count_real_roots, delta_minpoly_data
from utils.search import (
    DEFAULT_ENUMERATION_CEILING,
    DEFAULT_PANEL_SIZE,
    GrowthData,
    build_panel,
    direct_enumeration,
    exact_power_check,
    fib_mod_scan,
    growth_constant,
    index_bound,
    max_power_coefficient,
    small_b_solutions,
)

logger = logging.getLogger(__name__)

CASES = (5, 7, 11, 13, 17)
TRIVIAL_INDICES = (0, 1, 2, 6)
SOUND = 'no nontrivial q-th power'
INCONCLUSIVE = 'inconclusive'
OPTIONAL_STAGES = ('enumeration',)
# the final search always covers max|u| <= MIN_SEARCH_BOUND
MIN_SEARCH_BOUND = 4
PELL_CHECK_LIMIT = 10 ** 4


class ConfigError(FibPowersError):
    pass


class StageFailed(FibPowersError):
    pass


# Configuration

class StageToggles(BaseModel):
    model_config = ConfigDict(frozen=True)

    reduction: bool = True
    growth: bool = True
    sieve: bool = True
    enumeration: bool = True
    small_b: bool = True


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: Union[int, Literal['all']] = 'all'
    sigma1: Optional[float] = None
    sigma_cap: int = DEFAULT_SIGMA_CAP
    precision: int = DEFAULT_PRECISION
    precision_ceiling: int = PRECISION_CEILING
    panel_size: int = DEFAULT_PANEL_SIZE
    jobs: int = 1
    report_dir: Path = Path('reports')
    units_dir: Optional[Path] = None
    stages: StageToggles = StageToggles()
    checkpoint: bool = True
    enumeration_ceiling: int = DEFAULT_ENUMERATION_CEILING

    @field_validator('n')
    @classmethod
    def _known_case(cls, value):
        if value != 'all' and value not in CASES:
            raise ValueError(f'n must be one of {CASES} or "all", got {value}')
        return value

    @field_validator('sigma1')
    @classmethod
    def _sigma_above_one(cls, value):
        if value is not None and value <= 1:
            raise ValueError(f'sigma1 must exceed 1, got {value}')
        return value

    @field_validator('sigma_cap')
    @classmethod
    def _cap_at_least_ten(cls, value):
        if value < 10:
            raise ValueError(f'sigma_cap must be at least 10, got {value}')
        return value

    @field_validator('precision', 'panel_size', 'jobs', 'enumeration_ceiling')
    @classmethod
    def _positive(cls, value):
        if value < 1:
            raise ValueError(f'must be positive, got {value}')
        return value

    @property
    def cases(self) -> tuple:
        return CASES if self.n == 'all' else (self.n,)

    @property
    def sigmas(self) -> tuple:
        if self.sigma1 is None:
            return sigma_ladder(self.sigma_cap)
        # decimal value as written, not the binary float
        return (Fraction(str(self.sigma1)),)


def load_config(**options) -> RunConfig:
    try:
        return RunConfig(**options)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


# Elementary checks

def pell_identity_check(m_limit: int) -> bool:
    """F_{m+1}^2 - F_{m+1} F_m - F_m^2 = (-1)^m for 0 <= m <= m_limit."""
    if m_limit < 1:
        raise ValueError('m_limit must be at least 1')
    a, b = 0, 1
    for m in range(m_limit + 1):
        if b * b - b * a - a * a != (-1) ** m:
            return False
        a, b = b, a + b
    return True


def lemma1_targets(m: int) -> frozenset:
    """Indices whose q-th power status decides that of F_m."""
    if m in TRIVIAL_INDICES:
        return frozenset({m})
    if m < 1:
        raise ValueError(f'index must be non-negative, got {m}')
    return frozenset(primefactors(m))


@dataclass(frozen=True)
class ChainReport:
    x: int
    q: int
    is_square: bool
    z: Optional[int] = None
    v: Optional[int] = None
    sign: Optional[int] = None
    identity_holds: bool = False


def discriminant_chain_check(x: int, q: int) -> ChainReport:
    """If 5x^(2q) - 4 = z^2, write z = 5v + sign and test x^(2q) = (2v)^2 + (v + sign)^2."""
    if x < 1:
        raise ValueError(f'x must be positive, got {x}')
    power = x ** (2 * q)
    z, exact = integer_nthroot(5 * power - 4, 2)
    if not exact:
        return ChainReport(x, q, False)
    z = int(z)
    sign = 1 if z % 5 == 1 else -1
    v = (z - sign) // 5
    return ChainReport(x, q, True, z, v, sign, power == (2 * v) ** 2 + (v + sign) ** 2)


# Stages and certificates

@dataclass
class StageOutcome:
    name: str
    status: str  # ok | failed | skipped
    detail: str = ''
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {'name': self.name, 'status': self.status, 'detail': self.detail}


@dataclass
class Certificate:
    n: int
    stages: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    conclusion: str = INCONCLUSIVE

    @property
    def failed_stage(self) -> Optional[str]:
        return next((s.name for s in self.stages if s.status == 'failed'), None)

    def as_dict(self) -> dict:
        return {'n': self.n, 'q': self.n, 'conclusion': self.conclusion,
                'failed_stage': self.failed_stage,
                'stages': [s.as_dict() for s in self.stages], **self.data}


def conclude(stages: list) -> str:
    for stage in stages:
        if stage.status == 'failed':
            return INCONCLUSIVE
        if stage.status == 'skipped' and stage.name not in OPTIONAL_STAGES:
            return INCONCLUSIVE
    return SOUND if stages else INCONCLUSIVE


def _fingerprint(n: int, config: RunConfig, units_text: str) -> str:
    payload = {'n': n, 'sigmas': [str(s) for s in config.sigmas], 'precision': config.precision,
               'units': hashlib.sha256(units_text.encode()).hexdigest()}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


class Checkpoints:
    """JSON files under <report_dir>/n<n>/, valid only for a matching fingerprint."""

    def __init__(self, root: Path, fingerprint: str, enabled: bool = True):
        self.root = root
        self.fingerprint = fingerprint
        self.enabled = enabled

    def load(self, name: str) -> Optional[dict]:
        path = self.root / f'{name}.json'
        if not self.enabled or not path.exists():
            return None
        stored = json.loads(path.read_text())
        if stored.get('fingerprint') != self.fingerprint:
            logger.info('checkpoint stale name=%s path=%s', name, path)
            return None
        return stored['payload']

    def save(self, name: str, payload) -> None:
        if not self.enabled:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        text = json.dumps({'fingerprint': self.fingerprint, 'payload': payload},
                          sort_keys=True, indent=2)
        (self.root / f'{name}.json').write_text(text)


def search_bound(final_K3) -> int:
    return max(MIN_SEARCH_BOUND, *final_K3)


def _linear_form(n: int, j: int, units_dir: Optional[str], prec: int) -> tuple:
    units = load_unit_system(n, Path(units_dir) if units_dir else None)
    form = linear_form_data(number_field(n), units, CaseSelector.for_root(n, j), prec)
    return form.delta, form.mu


def _constants_job(n: int, j: int, config: RunConfig, delta_data: tuple) -> dict:
    """Constant ledger for one root index; runs in a worker process."""
    units = load_unit_system(n, config.units_dir)
    return case_constants(number_field(n), units, j, delta_data, prec=config.precision).as_dict()


def _reduction_job(n: int, j: int, config: RunConfig, constants: dict) -> list:
    """Reduction trace for one root index; runs in a worker process."""
    constants = CaseConstants.from_dict(n, constants)
    units_dir = str(config.units_dir) if config.units_dir else None
    inputs = ReductionInputs(constants.K1, constants.K2, constants.K3_init, n - 1,
                             partial(_linear_form, n, j, units_dir), f'n={n} j={j}')
    _, trace = reduce_to_fixpoint(inputs, config.sigmas, config.precision_ceiling)
    return [r.as_dict() for r in trace]


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(*item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(fn, *item) for item in items]
        return [f.result() for f in futures]


def _scan_part(m_max: int, panel, start: int, stop: int) -> list:
    return fib_mod_scan(m_max, panel, start=start, stop=stop)


def _partitions(start: int, stop: int, parts: int) -> list:
    size = max(2, -(-(stop - start) // parts))
    size += size % 2
    return [(a, min(a + size, stop)) for a in range(start, stop, size)]


class _Run:
    """Stage bookkeeping for one case."""

    def __init__(self, n: int):
        self.certificate = Certificate(n)

    def stage(self, name: str, enabled: bool, action: Callable[[], Optional[str]]) -> bool:
        outcomes = self.certificate.stages
        if self.certificate.failed_stage is not None:
            outcomes.append(StageOutcome(name, 'skipped', 'earlier stage failed'))
            return False
        if not enabled:
            outcomes.append(StageOutcome(name, 'skipped', 'disabled'))
            return False
        started = time.perf_counter()
        try:
            detail = action() or ''
        except Exception as exc:
            elapsed = time.perf_counter() - started
            logger.error('stage failed n=%d stage=%s error=%s: %s', self.certificate.n, name,
                         type(exc).__name__, exc)
            outcomes.append(StageOutcome(name, 'failed', f'{type(exc).__name__}: {exc}', elapsed))
            return False
        elapsed = time.perf_counter() - started
        logger.info('stage ok n=%d stage=%s seconds=%.2f %s', self.certificate.n, name, elapsed, detail)
        outcomes.append(StageOutcome(name, 'ok', detail, elapsed))
        return True


def run_case(n: int, config: RunConfig) -> Certificate:
    """Run every stage for exponent n and return its certificate; stage errors never escape."""
    if n not in CASES:
        raise ConfigError(f'n must be one of {CASES}, got {n}')
    run = _Run(n)
    data = run.certificate.data
    state = {}

    def elementary():
        if not pell_identity_check(PELL_CHECK_LIMIT):
            raise StageFailed('Fibonacci norm identity failed')
        chain = discriminant_chain_check(1, n)
        if not chain.identity_holds:
            raise StageFailed('trivial solution fails the discriminant chain')
        data['trivial_indices'] = {str(m): exact_power_check(m, n) for m in TRIVIAL_INDICES}
        return 'identity and trivial chain checked'

    def polynomial():
        f = build_fn(n)
        state['f'] = f
        data['polynomial'] = [str(c) for c in f.coeffs]
        return f'f={f}'

    def irreducibility():
        data['irreducibility'] = certify_irreducible(state['f']).as_dict()

    def roots():
        real = count_real_roots(state['f'])
        if real != n:
            raise StageFailed(f'expected {n} real roots, found {real}')
        state['field'] = number_field(n)

    def units():
        state['units'] = load_unit_system(n, config.units_dir)
        report = verify_unit_system(state['units'], state['field'], config.precision)
        data['units'] = {'source': state['units'].source, **report.as_dict()}

    checkpoints = None

    def delta_minpoly():
        nonlocal checkpoints
        units_text = '\n'.join(str(u) for u in state['units'].units)
        checkpoints = Checkpoints(Path(config.report_dir) / f'n{n}',
                                  _fingerprint(n, config, units_text), config.checkpoint)
        stored = checkpoints.load('delta_minpoly')
        if stored is None:
            # raises MinpolyMismatch unless the closed form is reproduced
            degree, leading = delta_minpoly_data(state['field'].roots, 1, 2, 3)
            stored = {'degree': degree, 'leading': str(leading)}
            checkpoints.save('delta_minpoly', stored)
        state['delta_data'] = (stored['degree'], int(stored['leading']))
        data['delta_minpoly'] = stored
        return f'degree={stored["degree"]} leading={stored["leading"]}'

    def constants():
        jobs, cached = [], {}
        for j in range(1, n + 1):
            stored = checkpoints.load(f'constants_j{j}')
            if stored is None:
                jobs.append((n, j, config, state['delta_data']))
            else:
                cached[j] = stored
        for (_, j, _, _), result in zip(jobs, _map(_constants_job, jobs, config.jobs)):
            checkpoints.save(f'constants_j{j}', result)
            cached[j] = result
        logger.info('constants n=%d computed=%d resumed=%d', n, len(jobs), n - len(jobs))
        results = [cached[j] for j in range(1, n + 1)]
        state['constants'] = [CaseConstants.from_dict(n, r) for r in results]
        data['constants'] = results
        return f'cases={n}'

    def reduction():
        jobs, traces = [], {}
        for j, constants_ in enumerate(data['constants'], start=1):
            stored = checkpoints.load(f'trace_j{j}')
            if stored:
                traces[j] = stored
            else:
                jobs.append((n, j, config, constants_))
        for (_, j, _, _), trace in zip(jobs, _map(_reduction_job, jobs, config.jobs)):
            checkpoints.save(f'trace_j{j}', trace)
            traces[j] = trace
        logger.info('reduction n=%d computed=%d resumed=%d', n, len(jobs), n - len(jobs))
        final = [int(traces[j][-1]['K3_out']) for j in range(1, n + 1)]
        state['final_K3'] = final
        data['traces'] = {str(j): traces[j] for j in range(1, n + 1)}
        data['final_K3'] = [str(k) for k in final]
        return f'final_K3={final}'

    def growth():
        stored = checkpoints.load('growth')
        K3max = search_bound(state['final_K3'])
        if stored and int(stored['K3max']) == K3max:
            growth_data = GrowthData.from_dict(stored)
        else:
            M = growth_constant(state['f'])
            v = max_power_coefficient(state['units'], state['field'], K3max)
            growth_data = GrowthData(M, v, K3max)
            checkpoints.save('growth', growth_data.as_dict())
        state['growth'] = growth_data
        m_max = index_bound(growth_data.M, growth_data.v, n)
        state['m_max'] = m_max
        data['growth'] = growth_data.as_dict()
        data['m_max'] = str(m_max)
        return f'K3max={K3max} m_max={m_max}'

    def sieve():
        panel = build_panel(n, config.panel_size)
        m_max = state['m_max']
        parts = _partitions(3, m_max + 1, config.jobs)
        scans = _map(_scan_part, [(m_max, panel, a, b) for a, b in parts], config.jobs)
        state['survivors'] = [j for part in scans for j in part]
        data['panel'] = panel.as_dict()
        logger.info('sieve n=%d m_max=%d partitions=%d survivors=%d', n, m_max, len(parts),
                    len(state['survivors']))
        return f'survivors={len(state["survivors"])}'

    def exact_checks():
        verdicts = {}
        for j in state['survivors']:
            verdicts[j] = exact_power_check(j, n)
            logger.debug('survivor n=%d j=%d power=%s', n, j, verdicts[j])
        data['survivors'] = [{'j': str(j), 'is_power': verdicts[j]} for j in sorted(verdicts)]
        hits = [j for j, hit in verdicts.items() if hit]
        if hits:
            raise StageFailed(f'F_j is a {n}-th power for j in {hits}')
        return f'checked={len(verdicts)}'

    def small_b():
        b_max = max(b_threshold(c, n) for c in state['constants'])
        solutions = small_b_solutions(state['field'], b_max)
        data['small_b'] = {'b_max': b_max, 'solutions': [[str(a), str(b)] for a, b in solutions]}
        nontrivial = [s for s in solutions if s[1] != 0]
        if nontrivial:
            raise StageFailed(f'unit equation has small solutions {nontrivial}')
        return f'b_max={b_max}'

    def enumeration():
        bound = max(state['final_K3'])
        candidates = direct_enumeration(state['field'], state['units'], bound, config.enumeration_ceiling)
        data['enumeration'] = {'bound': bound,
                               'candidates': [[str(c.A), str(c.B)] for c in candidates]}
        nontrivial = [c for c in candidates if c.B != 0]
        if nontrivial:
            raise StageFailed(f'unit products linear in theta with B != 0: {nontrivial}')
        return f'bound={bound} candidates={len(candidates)}'

    toggles = config.stages
    run.stage('elementary', True, elementary)
    run.stage('polynomial', True, polynomial)
    run.stage('irreducibility', True, irreducibility)
    run.stage('roots', True, roots)
    run.stage('units', True, units)
    run.stage('delta_minpoly', True, delta_minpoly)
    run.stage('constants', True, constants)
    run.stage('reduction', toggles.reduction, reduction)
    run.stage('growth', toggles.reduction and toggles.growth, growth)
    run.stage('sieve', toggles.growth and toggles.sieve and toggles.reduction, sieve)
    run.stage('exact_checks', 'survivors' in state, exact_checks)
    run.stage('small_b', toggles.small_b, small_b)
    run.stage('enumeration', toggles.enumeration and n == 5 and 'final_K3' in state, enumeration)
    run.certificate.conclusion = conclude(run.certificate.stages)
    logger.info('case finished n=%d conclusion=%s failed_stage=%s', n, run.certificate.conclusion,
                run.certificate.failed_stage)
    return run.certificate


def emit_certificate(certificate: Certificate, path: Path) -> Path:
    """Canonical JSON: sorted keys, big integers as decimal strings, no wall times."""
    path = Path(path)
    text = json.dumps(certificate.as_dict(), sort_keys=True, indent=2) + '\n'
    with open(path, 'w') as fh:
        fh.write(text)
    return path


def constants_ledger(certificate: dict) -> pd.DataFrame:
    """One row per root index: constant enclosures (upper ends), K3 initial and final."""
    rows = []
    final = certificate.get('final_K3') or []
    traces = certificate.get('traces') or {}
    for entry in certificate.get('constants', []):
        j = entry['j']
        row = {'n': certificate['n'], 'j': j}
        for name in ('c1', 'c2', 'c2a', 'c3', 'c4', 'c5', 'c6', 'c7', 'K1', 'K2'):
            row[name] = entry[name][1]
        row['K3_init'] = entry['K3_init']
        row['K3_final'] = final[j - 1] if len(final) >= j else None
        row['steps'] = len(traces.get(str(j), []))
        rows.append(row)
    return pd.DataFrame(rows)
