'''The verify module runs the numerical theorem suite on one graph and bandwidth.

Every check is a set of seeded trials. A trial returns its excess over the allowed bound, so a
trial passes when the excess is at most zero, or None when it does not apply to the configuration.
Trials are independent and fanned out over a thread pool; results are collected in seed order so
the report only depends on its inputs.
'''

from concurrent.futures import ThreadPoolExecutor
import itertools
import math

import numpy as np
from loguru import logger
from retval import RetVal

from pwgs.config import default_config, thread_count
from pwgs.errorcodes import InvalidParameter, NoAdmissibleSet
from pwgs.frames import frame_bounds, reconstruct, partial_reconstructions, \
	stability_certificate, lambda_bound_from_sampling, uniqueness_from_lambda_set, \
	full_space_counterexample
from pwgs.graph import Graph, VertexSet, complement, boundary_and_closure, \
	maximal_independent_set, generate
from pwgs.lambdacert import minimal_lambda, is_lambda_set, check_independent_lemma, \
	union_lambda_bound
from pwgs.setsearch import make_search_config, greedy_lambda_set, prune_sampling_set
from pwgs.spectral import Spectrum, apply_laplacian, laplacian_matrix, compute_spectrum, \
	spectrum_diagnostics, project_pw, delta_projection, random_bandlimited, pw_dimension, \
	sampled_norm, out_of_band_residual

EXHAUSTIVE_LIMIT = 8
PERMUTATIONS = 20

# λω within this distance of 1 counts as the boundary case
STRICT_TOL = 1e-12


class SuiteReport:
	'''Outcome of every check of the theorem suite'''
	def __init__(self, omega: float, seeds: int) -> None:
		self.omega = omega
		self.seeds = seeds
		self.checks = []
		self.info = dict()

	def add(self, name: str, excesses: list) -> None:
		'''Records a check from the excesses of its trials'''
		applied = [ x for x in excesses if x is not None ]
		worst = max(applied) if applied else None
		passed = all(x <= 0 for x in applied)
		self.checks.append({
			'name': name,
			'passed': passed,
			'trials': len(applied),
			'worst_excess': worst,
		})
		if not passed:
			logger.warning(f"check {name} failed: worst excess {worst!r}")

	def ok(self) -> bool:
		'''Returns true if every check passed'''
		return all(x['passed'] for x in self.checks)

	def failed(self) -> list:
		return [ x['name'] for x in self.checks if not x['passed'] ]

	def flatten(self, graph_hash: str='') -> dict:
		return {
			'omega': self.omega,
			'seeds': self.seeds,
			'ok': self.ok(),
			'checks': self.checks,
			'info': self.info,
			'graph_hash': graph_hash,
		}


class _Context:
	def __init__(self, g: Graph, spec: Spectrum, omega: float, config: dict) -> None:
		self.g = g
		self.spec = spec
		self.omega = omega
		self.laplacian = laplacian_matrix(g)
		self.k = pw_dimension(spec, omega)
		self.rank_tol = config['tolerance']['rank_tol']
		self.slack = config['tolerance']['slack']
		self.cert_slack = config['tolerance']['certificate_slack']
		self.margin = config['search']['margin']

	def rng(self, seed: int, stream: int) -> np.random.Generator:
		return np.random.default_rng([ stream, seed ])

	def bandlimited(self, seed: int) -> np.ndarray:
		return random_bandlimited(self.spec, self.omega, seed)['signal']

	def random_subset(self, rng: np.random.Generator, low: int, high: int) -> VertexSet:
		size = int(rng.integers(low, high + 1))
		return VertexSet(rng.choice(self.g.n, size=size, replace=False).tolist())

	def random_independent(self, rng: np.random.Generator) -> VertexSet:
		chosen = set()
		for v in rng.permutation(self.g.n).tolist():
			if not chosen.intersection(self.g.adjacency[v]):
				chosen.add(v)
		members = sorted(chosen)
		size = int(rng.integers(1, len(members) + 1))
		return VertexSet(rng.choice(members, size=size, replace=False).tolist())


def _relative(excess: float, scale: float) -> float:
	return excess / max(scale, 1.0)


# Spectral checks

def _trial_laplacian(ctx: _Context, seed: int):
	f = ctx.rng(seed, 1).standard_normal(ctx.g.n)
	matrix_free = apply_laplacian(ctx.g, f)['signal']
	return _relative(float(np.max(np.abs(matrix_free - ctx.laplacian @ f))), np.linalg.norm(f)) \
		- 1e-12


def _trial_bernstein(ctx: _Context, seed: int):
	f = ctx.bandlimited(seed)
	norm = float(np.linalg.norm(f))
	bound = (ctx.omega + ctx.spec.tie_tol) * norm * (1.0 + ctx.slack) + 1e-12 * norm
	return float(np.linalg.norm(ctx.laplacian @ f)) - bound


def _trial_operator_norm(ctx: _Context, seed: int):
	f = ctx.rng(seed, 2).standard_normal(ctx.g.n)
	norm = float(np.linalg.norm(f))
	bound = ctx.spec.omega_max * norm * (1.0 + ctx.slack) + 1e-12 * norm
	return float(np.linalg.norm(ctx.laplacian @ f)) - bound


def _trial_reproducing(ctx: _Context, seed: int):
	f = ctx.bandlimited(seed)
	v = int(ctx.rng(seed, 3).integers(0, ctx.g.n))
	theta = delta_projection(ctx.spec, ctx.omega, v)['signal']
	return _relative(abs(np.vdot(theta, f) - f[v]), np.linalg.norm(f)) - 1e-10


def _trial_projection_laws(ctx: _Context, seed: int):
	rng = ctx.rng(seed, 4)
	f = rng.standard_normal(ctx.g.n) + 1j * rng.standard_normal(ctx.g.n)
	h = rng.standard_normal(ctx.g.n)
	pf = project_pw(ctx.spec, f, ctx.omega)['signal']
	ppf = project_pw(ctx.spec, pf, ctx.omega)['signal']
	ph = project_pw(ctx.spec, h, ctx.omega)['signal']
	lower = project_pw(ctx.spec, f, ctx.omega / 2)['signal']
	nested = project_pw(ctx.spec, lower, ctx.omega)['signal']

	scale = float(np.linalg.norm(f) * max(np.linalg.norm(h), 1.0))
	errors = [
		_relative(float(np.linalg.norm(ppf - pf)), np.linalg.norm(f)),
		_relative(abs(np.vdot(h, pf) - np.vdot(ph, f)), scale),
		_relative(float(np.linalg.norm(nested - lower)), np.linalg.norm(f)),
		float(np.linalg.norm(pf) - np.linalg.norm(f)) / max(np.linalg.norm(f), 1.0),
	]
	return max(errors) - 1e-12


# λ-set checks

def _independent_sets(ctx: _Context, seeds: int) -> list:
	if ctx.g.n <= EXHAUSTIVE_LIMIT:
		out = []
		for size in range(1, ctx.g.n):
			for combo in itertools.combinations(range(ctx.g.n), size):
				candidate = VertexSet(combo)
				if all(not set(combo).intersection(ctx.g.adjacency[v]) for v in combo):
					out.append(candidate)
		return out
	return [ ctx.random_independent(ctx.rng(seed, 5)) for seed in range(seeds) ]


def _trial_independent(ctx: _Context, s: VertexSet):
	status = check_independent_lemma(ctx.g, s, ctx.slack, ctx.laplacian)
	if status.error():
		return None
	return status['certificate'].lambda_min - (1.0 + ctx.slack)


def _trial_finite_set(ctx: _Context, seed: int):
	s = ctx.random_subset(ctx.rng(seed, 6), 1, ctx.g.n - 1)
	status = minimal_lambda(ctx.g, s, ctx.laplacian)
	if status.error():
		return 1.0
	cert = status['certificate']
	status = is_lambda_set(ctx.g, s, cert.lambda_min, ctx.slack, ctx.laplacian)
	if status.error() or not status['is_lambda_set']:
		return 1.0

	# The witness attains the constant
	tightness = abs(float(np.linalg.norm(ctx.laplacian @ cert.witness)) - cert.sigma_min) \
		/ cert.sigma_min
	return tightness - 1e-9


def _trial_union(ctx: _Context, seed: int):
	rng = ctx.rng(seed, 7)
	subsets, taken = [], set()
	for v in rng.permutation(ctx.g.n).tolist():
		closure = set(boundary_and_closure(ctx.g, VertexSet([ v ]))['closure'].members)
		if not closure & taken:
			subsets.append(VertexSet([ v ]))
			taken |= closure
		if len(subsets) == 3:
			break
	if len(subsets) < 2:
		return None

	lambdas = [ minimal_lambda(ctx.g, s, ctx.laplacian)['certificate'].lambda_min
		for s in subsets ]
	status = union_lambda_bound(ctx.g, subsets, lambdas, ctx.slack, ctx.laplacian)
	if status.error() or not status['verified']:
		return 1.0
	return status['certificate'].lambda_min - status['lambda_union'] * (1.0 + ctx.slack)


def _trial_monotone(ctx: _Context, seed: int):
	rng = ctx.rng(seed, 8)
	larger = ctx.random_subset(rng, 1, ctx.g.n - 1)
	size = int(rng.integers(1, len(larger) + 1))
	smaller = VertexSet(rng.choice(larger.as_list(), size=size, replace=False).tolist())
	lam_small = minimal_lambda(ctx.g, smaller, ctx.laplacian)['certificate'].lambda_min
	lam_large = minimal_lambda(ctx.g, larger, ctx.laplacian)['certificate'].lambda_min
	return lam_small - lam_large * (1.0 + ctx.slack)


# Sampling checks

def _lambda_sets(ctx: _Context, threads: int) -> list:
	'''λ-sets with λω < 1: the greedy search result and, for ω < 1, a maximal independent set'''
	out = []
	status = make_search_config(ctx.omega, margin=ctx.margin)
	if not status.error():
		status = greedy_lambda_set(ctx.g, ctx.spec, status['config'], threads, ctx.laplacian)
		if not status.error():
			out.append(status['certificate'])
		elif status.error() != NoAdmissibleSet:
			logger.warning(f"greedy λ-set search failed: {status.info()}")

	mis = maximal_independent_set(ctx.g)
	status = minimal_lambda(ctx.g, mis, ctx.laplacian)
	if not status.error() and status['certificate'].lambda_min * ctx.omega < 1.0:
		out.append(status['certificate'])
	return out


def _trial_stability(ctx: _Context, cert, probes: int):
	status = stability_certificate(ctx.g, ctx.spec, ctx.omega, cert.subset, probes, 0,
		ctx.rank_tol, ctx.cert_slack, ctx.laplacian)
	if status.error():
		return 1.0
	stable = status['certificate']
	excess = stable.guaranteed_lower_bound() - stable.frame_report.lower_bound - 1e-9
	if not stable.verified:
		excess = max(excess, 1.0)

	status = uniqueness_from_lambda_set(ctx.g, ctx.spec, ctx.omega, cert.subset, ctx.rank_tol,
		ctx.laplacian)
	if status.error() or (status['applies'] and not status['is_uniqueness_set']):
		excess = max(excess, 1.0)
	return excess


def _sampling_sets(ctx: _Context, seeds: int) -> list:
	'''Seeded sampling sets with a nonempty complement: random supersets of size ≥ k plus the
	pruned set'''
	out = []
	if ctx.g.n < 2:
		return out
	for seed in range(seeds):
		rng = ctx.rng(seed, 9)
		w = ctx.random_subset(rng, min(ctx.k, ctx.g.n - 1), ctx.g.n - 1)
		out.append(w)

	status = prune_sampling_set(ctx.spec, ctx.omega, 1e-2)
	if not status.error() and len(status['sampling_set']) < ctx.g.n:
		out.append(status['sampling_set'])
	return out


def _trial_lambda_bound(ctx: _Context, w: VertexSet):
	report = frame_bounds(ctx.spec, ctx.omega, w, ctx.rank_tol)['report']
	if ctx.omega <= 0 or report.lower_bound <= 1e-6:
		return None
	status = lambda_bound_from_sampling(ctx.g, ctx.spec, ctx.omega, w, ctx.rank_tol,
		ctx.cert_slack, ctx.laplacian)
	if status.error() or not status['verified']:
		return 1.0
	excess = status['certificate'].lambda_min \
		- ((1.0 + 1.0 / math.sqrt(report.lower_bound)) / ctx.omega + 1e-6)

	# The out-of-band estimate used along the way, on the certificate witness
	status = out_of_band_residual(ctx.spec, status['certificate'].witness, ctx.omega,
		ctx.laplacian)
	if status.error():
		return 1.0
	return max(excess, status['residual'] - status['bound'] * (1.0 + ctx.slack) - 1e-12)


def _trial_sandwich(ctx: _Context, w: VertexSet, seed: int):
	report = frame_bounds(ctx.spec, ctx.omega, w, ctx.rank_tol)['report']
	f = ctx.bandlimited(seed)
	energy = float(np.linalg.norm(f))**2
	sampled = sampled_norm(f, w)**2
	return max(report.lower_bound * energy - 1e-9 - sampled,
		sampled - report.upper_bound * energy - 1e-9)


def _trial_reconstruction(ctx: _Context, w: VertexSet, seed: int):
	report = frame_bounds(ctx.spec, ctx.omega, w, ctx.rank_tol)['report']
	if report.lower_bound < 1e-4:
		return None
	rng = ctx.rng(seed, 10)
	f = ctx.bandlimited(seed)
	members = w.as_list()
	status = reconstruct(ctx.spec, ctx.omega, w, f[members], ctx.rank_tol)
	if status.error():
		return 1.0
	exact = float(np.linalg.norm(status['signal'] - f)) / max(np.linalg.norm(f), 1e-300) - 1e-8

	noise = 1e-3 * rng.standard_normal(len(members))
	status = reconstruct(ctx.spec, ctx.omega, w, f[members] + noise, ctx.rank_tol)
	if status.error():
		return 1.0
	noisy = float(np.linalg.norm(status['signal'] - f)) \
		- (float(np.linalg.norm(noise)) / math.sqrt(report.lower_bound) + 1e-9)
	return max(exact, noisy)


def _trial_unconditional(ctx: _Context, w: VertexSet, seed: int):
	report = frame_bounds(ctx.spec, ctx.omega, w, ctx.rank_tol)['report']
	if report.lower_bound < 1e-4:
		return None
	f = ctx.bandlimited(seed)
	members = w.as_list()
	rng = ctx.rng(seed, 11)
	worst = -math.inf
	for _ in range(PERMUTATIONS):
		order = rng.permutation(members).tolist()
		status = partial_reconstructions(ctx.spec, ctx.omega, w, f[members], order, ctx.rank_tol)
		if status.error():
			return 1.0
		worst = max(worst, float(np.linalg.norm(status['signal'] - f)) - 1e-9)
	return worst


def _trial_monotone_sampling(ctx: _Context, seed: int):
	rng = ctx.rng(seed, 12)
	larger = ctx.random_subset(rng, 1, ctx.g.n)
	size = int(rng.integers(1, len(larger) + 1))
	smaller = VertexSet(rng.choice(larger.as_list(), size=size, replace=False).tolist())
	small = frame_bounds(ctx.spec, ctx.omega, smaller, ctx.rank_tol)['report']
	large = frame_bounds(ctx.spec, ctx.omega, larger, ctx.rank_tol)['report']
	return max(small.lower_bound - large.lower_bound, small.upper_bound - large.upper_bound) \
		- 1e-12


def run_suite(g: Graph, spec: Spectrum, omega: float, seeds: int=100, config: dict=None) \
	-> RetVal:
	'''Runs every theorem check for one graph and bandwidth.

	Parameters:
	  * seeds: number of seeded trials per check
	  * config: settings from pwgs.config; defaults are used if not given

	Returns:
	  * report: (SuiteReport)
	'''
	if not np.isfinite(omega) or omega < 0:
		return RetVal(InvalidParameter, f"bandwidth must be a finite nonnegative number, got {omega}")
	if seeds < 1:
		return RetVal(InvalidParameter, 'seeds must be at least 1')
	if config is None:
		config = default_config()

	ctx = _Context(g, spec, omega, config)
	report = SuiteReport(omega, seeds)
	threads = thread_count(config)
	logger.info(f"running theorem suite: n={g.n}, omega={omega!r}, seeds={seeds}, "
		f"threads={threads}")

	diag = spectrum_diagnostics(spec, ctx.laplacian)
	report.add('spectrum_invariants', [
		diag['symmetry_error'] - 1e-12,
		diag['orthonormality_error'] - 1e-10,
		diag['reassembly_error'] - 1e-8,
		-1e-9 - diag['min_eigenvalue'],
		diag['max_eigenvalue'] - (2.0 + 1e-9),
		abs(diag['min_eigenvalue']) - 1e-9,
	])

	seed_range = range(seeds)
	with ThreadPoolExecutor(max_workers=threads) as pool:
		def trials(fn, items):
			return list(pool.map(lambda x: fn(ctx, x), items))

		if g.n <= 200:
			report.add('laplacian_matrix_free', trials(_trial_laplacian, seed_range))
		report.add('bernstein_bound', trials(_trial_bernstein, seed_range))
		report.add('operator_norm_bound', trials(_trial_operator_norm, seed_range))
		report.add('reproducing_kernel', trials(_trial_reproducing, seed_range))
		report.add('projection_laws', trials(_trial_projection_laws, seed_range))

		report.add('lemma_independent_sets', trials(_trial_independent,
			_independent_sets(ctx, seeds)))
		report.add('lemma_finite_sets', trials(_trial_finite_set, seed_range))
		report.add('lemma_disjoint_closures', trials(_trial_union, seed_range))
		report.add('lambda_monotone', trials(_trial_monotone, seed_range))

		lambda_sets = _lambda_sets(ctx, 1)
		report.add('stability_theorem', [ _trial_stability(ctx, cert, seeds)
			for cert in lambda_sets ])
		report.info['lambda_sets'] = [ { 'subset': cert.subset.as_list(),
			'lambda_min': cert.lambda_min } for cert in lambda_sets ]

		sampling_sets = _sampling_sets(ctx, seeds)
		report.add('complement_lambda_bound', trials(_trial_lambda_bound, sampling_sets))

		pairs = [ (w, seed) for w in sampling_sets[-3:] for seed in seed_range ]
		report.add('frame_sandwich', trials(lambda c, p: _trial_sandwich(c, *p), pairs))
		report.add('exact_reconstruction', trials(lambda c, p: _trial_reconstruction(c, *p),
			pairs))
		report.add('unconditional_convergence', trials(lambda c, p: _trial_unconditional(c, *p),
			[ (w, 0) for w in sampling_sets[-3:] ]))
		report.add('monotone_sampling', trials(_trial_monotone_sampling, seed_range))

	if g.n >= 2:
		status = full_space_counterexample(spec, complement(VertexSet([ 0 ]), g.n), ctx.rank_tol)
		report.add('full_space_not_sampled', [ 0.0 if status['holds'] else 1.0 ])

	# The gap between λω < 1 and λω ≤ 1 + c_ω is reported, not checked
	if sampling_sets and omega > 0:
		status = lambda_bound_from_sampling(g, spec, omega, sampling_sets[-1], ctx.rank_tol,
			ctx.cert_slack, ctx.laplacian)
		if not status.error():
			report.info['characterization_gap'] = status['gap']

	report.info['pw_dim'] = ctx.k
	report.info['omega_max'] = spec.omega_max
	return RetVal().set_value('report', report)


def _guarantee(lam: float, omega: float, omega_max: float) -> tuple:
	'''Returns the lower frame bound ((1 − λω)/(1 + λ·ω_max))² and whether λω < 1 strictly.
	At λω = 1 the bound degenerates to 0, which still holds. Above 1 there is none.'''
	product = lam * omega
	if abs(product - 1.0) <= STRICT_TOL:
		return 0.0, False
	if product < 1.0:
		return ((1.0 - product) / (1.0 + lam * omega_max))**2, True
	return None, False


def truncation_study(sizes: list, omega: float=1.0, config: dict=None) -> RetVal:
	'''Follows stable sampling on growing m×m boxes, the finite truncations of ℤ².

	For each size the λ-set is a maximal independent set S, and W = V∖S. The stability
	guarantee ((1 − λω)/(1 + λ·ω_max))² is evaluated both with the lemma constant λ = 1 and with
	λ_min(S), and compared with the measured lower frame bound. Each guarantee carries a flag saying
	whether λω < 1 holds strictly; at λω = 1 the reported bound is 0.

	Returns:
	  * rows: (list) one dictionary per size
	  * pw_dim_increasing: (bool) whether pw_dim strictly increases with the size
	  * holds: (bool) whether every applicable guarantee holds
	'''
	if config is None:
		config = default_config()
	if not sizes or any(m < 2 for m in sizes):
		return RetVal(InvalidParameter, 'box sizes must be at least 2')

	rows = []
	for m in sorted(sizes):
		status = generate('lattice_box', dims=[ m, m ])
		if status.error():
			return status
		g = status['graph']

		status = compute_spectrum(g, config['solver']['dense_limit'],
			config['tolerance']['tie_tol_factor'])
		if status.error():
			return status
		spec = status['spectrum']

		s = maximal_independent_set(g)
		lam = minimal_lambda(g, s)['certificate'].lambda_min
		report = frame_bounds(spec, omega, complement(s, g.n),
			config['tolerance']['rank_tol'])['report']

		row = {
			'm': m,
			'n': g.n,
			'pw_dim': pw_dimension(spec, omega),
			'omega_max': spec.omega_max,
			'lambda_lemma': 1.0,
			'lambda_min': lam,
			'lower_bound': report.lower_bound,
		}
		for name, value in [ ('lemma', 1.0), ('min', lam) ]:
			row['guarantee_' + name], row[name + '_strict'] = _guarantee(value, omega,
				spec.omega_max)
		row['holds'] = all(report.lower_bound >= row[key] - 1e-9
			for key in [ 'guarantee_lemma', 'guarantee_min' ] if row[key] is not None)
		rows.append(row)
		logger.info(f"truncation m={m}: pw_dim={row['pw_dim']}, A={report.lower_bound!r}")

	dims = [ row['pw_dim'] for row in rows ]
	return RetVal().set_values({
		'rows': rows,
		'pw_dim_increasing': all(a < b for a, b in zip(dims, dims[1:])),
		'holds': all(row['holds'] for row in rows),
	})
