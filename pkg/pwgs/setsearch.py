'''Greedy construction of large λ-sets and small sampling sets.

Uniqueness sets are found by subtracting λ-sets: if S is a λ-set with λω < 1 then V∖S samples
PW_ω stably. greedy_lambda_set() grows S under a cap on λ, and prune_sampling_set() works from the
other end, removing vertices from W = V while the lower frame bound stays above a target.

Both searches re-certify every candidate from scratch and break ties by the smallest vertex id, so
their results depend only on their inputs.
'''

from concurrent.futures import ThreadPoolExecutor
import math

import numpy as np
import scipy.linalg
from loguru import logger
from retval import RetVal

from pwgs.errorcodes import InvalidParameter, NoAdmissibleSet, InfeasibleTarget
from pwgs.frames import frame_bounds, DEFAULT_RANK_TOL
from pwgs.graph import Graph, VertexSet, maximal_independent_set
from pwgs.lambdacert import minimal_lambda
from pwgs.spectral import Spectrum, random_bandlimited, sampled_norm, laplacian_matrix, \
	pw_dimension

TARGETS = [ 'maximize_removed', 'minimize_samples' ]
DEFAULT_MARGIN = 1e-3
DEFAULT_MAX_ITERATIONS = 10_000

# Relative slack applied when comparing a lower frame bound against its target
A_MIN_SLACK = 1e-12


class SearchConfig:
	'''Parameters shared by the set searches.

	Notes:
		Use make_search_config() to get a validated instance. lambda_cap·ω must stay below 1 so
		that every λ-set found satisfies the stability hypothesis.
	'''
	def __init__(self, omega: float, target: str, lambda_cap: float, seed: int,
		max_iterations: int) -> None:
		self.omega = float(omega)
		self.target = target
		self.lambda_cap = float(lambda_cap)
		self.seed = int(seed)
		self.max_iterations = int(max_iterations)

	def flatten(self) -> dict:
		return {
			'omega': self.omega,
			'target': self.target,
			'lambda_cap': self.lambda_cap if math.isfinite(self.lambda_cap) else None,
			'seed': self.seed,
			'max_iterations': self.max_iterations,
		}


def default_lambda_cap(omega: float, margin: float=DEFAULT_MARGIN) -> float:
	'''Returns (1/ω)(1 − margin), or infinity for ω = 0'''
	if omega == 0:
		return math.inf
	return (1.0 - margin) / omega


def make_search_config(omega: float, target: str='maximize_removed', lambda_cap: float=None,
	seed: int=0, max_iterations: int=DEFAULT_MAX_ITERATIONS, margin: float=DEFAULT_MARGIN) \
	-> RetVal:
	'''Creates a validated SearchConfig.

	Returns:
	  * config: (SearchConfig)
	'''
	if not np.isfinite(omega) or omega < 0:
		return RetVal(InvalidParameter, f"bandwidth must be a finite nonnegative number, got {omega}")
	if target not in TARGETS:
		return RetVal(InvalidParameter, f"target must be one of {TARGETS}, got '{target}'")
	if max_iterations < 1:
		return RetVal(InvalidParameter, 'max_iterations must be at least 1')

	if lambda_cap is None:
		lambda_cap = default_lambda_cap(omega, margin)
	if not lambda_cap > 0:
		return RetVal(InvalidParameter, f"lambda_cap must be positive, got {lambda_cap}")
	if lambda_cap * omega >= 1.0:
		return RetVal(InvalidParameter, f"lambda_cap·ω = {lambda_cap * omega!r} must be below 1")

	return RetVal().set_value('config', SearchConfig(omega, target, lambda_cap, seed,
		max_iterations))


def _lambda_of(g: Graph, members: set, laplacian: np.ndarray) -> float:
	status = minimal_lambda(g, VertexSet(members), laplacian)
	if status.error():
		return math.inf
	return status['certificate'].lambda_min


def greedy_lambda_set(g: Graph, spec: Spectrum, cfg: SearchConfig, threads: int=1,
	laplacian: np.ndarray=None) -> RetVal:
	'''Grows a λ-set with λ_min below cfg.lambda_cap.

	For ω < 1 the search starts from a maximal independent set, which is a λ-set with λ ≤ 1.
	Otherwise it starts empty. Each step adds the vertex giving the smallest resulting λ_min as
	long as that stays below the cap. S never grows to the whole vertex set.

	Returns:
	  * certificate: (LambdaCertificate) of the final set
	  * steps: (list) one record per candidate considered
	'''
	if laplacian is None:
		laplacian = laplacian_matrix(g)

	steps = []
	current = set()
	if cfg.omega < 1.0:
		seed_set = maximal_independent_set(g)
		lam = _lambda_of(g, set(seed_set.members), laplacian)
		steps.append({ 'step': 0, 'candidate': seed_set.as_list(), 'lambda_min': lam,
			'accepted': lam < cfg.lambda_cap })
		if lam < cfg.lambda_cap:
			current = set(seed_set.members)
		else:
			logger.debug(f"independent seed has lambda_min {lam!r}, not below the cap")

	executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
	try:
		for step in range(1, cfg.max_iterations + 1):
			candidates = [ v for v in range(g.n) if v not in current ]
			if len(candidates) <= 1:
				break

			def evaluate(v, base=frozenset(current)):
				return _lambda_of(g, set(base) | { v }, laplacian)

			if executor:
				scores = list(executor.map(evaluate, candidates))
			else:
				scores = [ evaluate(v) for v in candidates ]

			# Strict comparison keeps the smallest id among ties
			best = 0
			for i, score in enumerate(scores):
				if score < scores[best]:
					best = i

			for v, score in zip(candidates, scores):
				steps.append({ 'step': step, 'candidate': v, 'lambda_min': score,
					'accepted': v == candidates[best] and score < cfg.lambda_cap })

			if not scores[best] < cfg.lambda_cap:
				break
			current.add(candidates[best])
			logger.debug(f"greedy step {step}: added vertex {candidates[best]}, "
				f"lambda_min={scores[best]!r}")
	finally:
		if executor:
			executor.shutdown()

	if not current:
		return RetVal(NoAdmissibleSet,
			f"no vertex set has lambda_min below the cap {cfg.lambda_cap!r}")

	status = minimal_lambda(g, VertexSet(current), laplacian)
	if status.error():
		return status

	return RetVal().set_values({ 'certificate': status['certificate'], 'steps': steps })


def prune_sampling_set(spec: Spectrum, omega: float, a_min: float, seed: int=0, probes: int=0,
	rank_tol: float=DEFAULT_RANK_TOL) -> RetVal:
	'''Shrinks W = V one vertex at a time while the lower frame bound stays at least a_min.

	Each step removes the vertex whose removal leaves the largest lower frame bound. The search
	stops when no removal keeps A ≥ a_min, when A would fall to rank_tol or below, or when W is
	down to pw_dimension vertices, so the result is always a sampling set.

	Parameters:
	  * probes: number of random signals of PW_ω, seeded from seed, used to check the frame
			inequalities of the result

	Returns:
	  * sampling_set: (VertexSet)
	  * report: (FrameReport) of the result, with A ≥ a_min
	  * steps: (list) one record per removal
	  * probe_violations: (int) probes breaking A‖f‖² ≤ ‖f‖_W² ≤ B‖f‖²
	'''
	if not a_min > 0:
		return RetVal(InvalidParameter, f"a_min must be positive, got {a_min}")
	if a_min > 1.0:
		return RetVal(InfeasibleTarget, f"a_min = {a_min!r} exceeds the full-sampling bound 1")

	basis = spec.band_basis(omega)
	gram = basis.T @ basis
	current = list(range(spec.n))
	steps = []
	floor = max(pw_dimension(spec, omega), 1)

	while len(current) > floor:
		best_v, best_a = None, -math.inf
		for v in current:
			row = basis[v, :]
			a = scipy.linalg.eigvalsh(gram - np.outer(row, row))[0]
			if a > best_a:
				best_v, best_a = v, a

		if best_a < a_min * (1.0 - A_MIN_SLACK) or best_a <= rank_tol:
			break

		row = basis[best_v, :]
		gram = gram - np.outer(row, row)
		current.remove(best_v)
		steps.append({ 'removed': best_v, 'lower_bound': float(best_a), 'size': len(current) })

	w = VertexSet(current)
	status = frame_bounds(spec, omega, w, rank_tol)
	if status.error():
		return status
	report = status['report']

	violations = 0
	for i in range(probes):
		status = random_bandlimited(spec, omega, seed + i)
		if status.error():
			return status
		f = status['signal']
		energy = float(np.linalg.norm(f))**2
		sampled = sampled_norm(f, w)**2
		if sampled < report.lower_bound * energy - 1e-9 \
			or sampled > report.upper_bound * energy + 1e-9:
			violations += 1

	logger.debug(f"pruned sampling set to {len(w)} of {spec.n} vertices, A={report.lower_bound!r}")
	return RetVal().set_values({
		'sampling_set': w,
		'report': report,
		'steps': steps,
		'probe_violations': violations,
	})


def run_search(g: Graph, spec: Spectrum, cfg: SearchConfig, a_min: float=None, threads: int=1,
	probes: int=0) -> RetVal:
	'''Runs the search selected by cfg.target.

	maximize_removed grows a λ-set with greedy_lambda_set(). minimize_samples prunes a sampling set
	down to the lower frame bound a_min. If a_min is not given, the bound guaranteed by the cap,
	((1 − λω)/(1 + λ·ω_max))², is used.
	'''
	if cfg.target == 'maximize_removed':
		return greedy_lambda_set(g, spec, cfg, threads)

	if a_min is None:
		lam = cfg.lambda_cap if math.isfinite(cfg.lambda_cap) else 1.0
		a_min = ((1.0 - lam * cfg.omega) / (1.0 + lam * spec.omega_max))**2
	return prune_sampling_set(spec, cfg.omega, a_min, cfg.seed, probes)
