'''This module implements frames of projected deltas on Paley-Wiener spaces: frame bounds for a
sampling set, the dual frame, reconstruction from samples, and the two certificates tying sampling
sets to λ-sets.

With E the n×k matrix of in-band eigenvectors and E_W its rows at the sampling set W, the frame
operator restricted to PW_ω is represented in the eigenbasis by the k×k Gram matrix M = E_Wᵀ E_W.
Its extreme eigenvalues are the optimal frame bounds A and B in

	A‖f‖₂² ≤ Σ_{v∈W} |⟨f, θ_v⟩|² = ‖f‖_W² ≤ B‖f‖₂²,   f ∈ PW_ω.

W is a sampling set exactly when A > 0, and for finite graphs this is the same as W being a
uniqueness set.
'''

import math

import numpy as np
import scipy.linalg
from loguru import logger
from retval import RetVal, ErrBadValue

from pwgs.errorcodes import EmptySamplingSet, NotASamplingSet, SampleIndexMismatch, BandTooWide, \
	ZeroBandwidth, ComplementEmpty, VertexOutOfRange, InvalidParameter, EmptySet
from pwgs.graph import Graph, VertexSet, complement
from pwgs.lambdacert import minimal_lambda
from pwgs.spectral import Spectrum, random_bandlimited, sampled_norm

DEFAULT_RANK_TOL = 1e-10
DEFAULT_ILL_CONDITIONED = 1e8
DEFAULT_CERTIFICATE_SLACK = 1e-6


class FrameReport:
	'''Frame bounds of the projected deltas {θ_v : v ∈ W} on PW_ω'''
	def __init__(self, sampling_set: VertexSet, omega: float, lower_bound: float,
		upper_bound: float, pw_dim: int, rank_tol: float=DEFAULT_RANK_TOL,
		ill_conditioned: float=DEFAULT_ILL_CONDITIONED) -> None:
		self.sampling_set = sampling_set
		self.omega = float(omega)
		self.lower_bound = max(float(lower_bound), 0.0)
		self.upper_bound = float(upper_bound)
		self.pw_dim = int(pw_dim)
		self.rank_tol = rank_tol

		if self.lower_bound > 0:
			self.condition = self.upper_bound / self.lower_bound
			self.c_omega_empirical = 1.0 / math.sqrt(self.lower_bound)
		else:
			self.condition = math.inf
			self.c_omega_empirical = None
		self.ill_conditioned = self.condition > ill_conditioned

	def __repr__(self) -> str:
		return f"FrameReport(W={self.sampling_set.as_list()}, omega={self.omega!r}, " \
			f"A={self.lower_bound!r}, B={self.upper_bound!r})"

	def is_sampling_set(self) -> bool:
		'''Returns true if the lower frame bound clears the rank tolerance'''
		return self.lower_bound > self.rank_tol

	def flatten(self, graph_hash: str='') -> dict:
		'''Returns the report in the JSON export layout'''
		return {
			'sampling_set': self.sampling_set.as_list(),
			'omega': self.omega,
			'lower_bound': self.lower_bound,
			'upper_bound': self.upper_bound,
			'pw_dim': self.pw_dim,
			'condition': self.condition if math.isfinite(self.condition) else None,
			'c_omega_empirical': self.c_omega_empirical,
			'rank_tol': self.rank_tol,
			'is_sampling_set': self.is_sampling_set(),
			'ill_conditioned': self.ill_conditioned,
			'graph_hash': graph_hash,
		}


class StabilityCertificate:
	'''Norm equivalence ‖f‖_W ≤ ‖f‖₂ ≤ c_ω‖f‖_W for W = V∖S, derived from S being a λ-set with
	λω < 1, where c_ω = (1 + λ·ω_max)/(1 − λω).'''
	def __init__(self, lambda_set: VertexSet, lam: float, omega: float, omega_max: float,
		frame_report: FrameReport) -> None:
		self.lambda_set = lambda_set
		self.lam = float(lam)
		self.omega = float(omega)
		self.c_omega_theoretical = (1.0 + self.lam * omega_max) / (1.0 - self.lam * self.omega)
		self.frame_report = frame_report

		# Filled in by the empirical checks
		self.probes = 0
		self.worst_ratio = 0.0
		self.verified = False

	def guaranteed_lower_bound(self) -> float:
		'''Returns 1/c_ω², the lower frame bound implied by the theoretical constant'''
		return 1.0 / self.c_omega_theoretical**2

	def flatten(self, graph_hash: str='') -> dict:
		'''Returns the certificate in the JSON export layout'''
		return {
			'lambda_set': self.lambda_set.as_list(),
			'lambda': self.lam,
			'omega': self.omega,
			'lambda_omega': self.lam * self.omega,
			'c_omega_theoretical': self.c_omega_theoretical,
			'guaranteed_lower_bound': self.guaranteed_lower_bound(),
			'probes': self.probes,
			'worst_norm_ratio': self.worst_ratio,
			'verified': self.verified,
			'frame_report': self.frame_report.flatten(graph_hash),
			'graph_hash': graph_hash,
		}


def _sampled_basis(spec: Spectrum, omega: float, w: VertexSet) -> tuple:
	basis = spec.band_basis(omega)
	return basis, basis[list(w.members), :]


def frame_bounds(spec: Spectrum, omega: float, w: VertexSet, rank_tol: float=DEFAULT_RANK_TOL,
	ill_conditioned: float=DEFAULT_ILL_CONDITIONED) -> RetVal:
	'''Computes the optimal frame bounds of {θ_v : v ∈ W} on PW_ω.

	Returns:
	  * report: (FrameReport)
	'''
	if w.is_empty():
		return RetVal(EmptySamplingSet, 'the sampling set is empty')
	if not w.is_valid(spec.n):
		return RetVal(VertexOutOfRange, f"{w} has vertices outside 0..{spec.n - 1}")
	if not np.isfinite(omega) or omega < 0:
		return RetVal(InvalidParameter, f"bandwidth must be a finite nonnegative number, got {omega}")

	_, sampled = _sampled_basis(spec, omega, w)
	gram = sampled.T @ sampled
	bounds = scipy.linalg.eigvalsh(gram)

	report = FrameReport(w, omega, bounds[0], bounds[-1], gram.shape[0], rank_tol,
		ill_conditioned)
	if report.is_sampling_set() and report.ill_conditioned:
		logger.warning(f"sampling set of size {len(w)} is ill-conditioned: B/A = "
			f"{report.condition:.3e}")

	return RetVal().set_value('report', report)


def is_uniqueness_set(spec: Spectrum, omega: float, w: VertexSet,
	rank_tol: float=DEFAULT_RANK_TOL) -> RetVal:
	'''Checks whether W determines every signal of PW_ω. On a finite graph this holds exactly when
	the lower frame bound is positive, which is also when ‖·‖_W is a norm on PW_ω.

	Returns:
	  * is_uniqueness_set: (bool)
	  * report: (FrameReport)
	'''
	status = frame_bounds(spec, omega, w, rank_tol)
	if status.error():
		return status

	return RetVal().set_values({
		'is_uniqueness_set': status['report'].is_sampling_set(),
		'report': status['report'],
	})


def dual_frame(spec: Spectrum, omega: float, w: VertexSet, rank_tol: float=DEFAULT_RANK_TOL) \
	-> RetVal:
	'''Computes the dual frame Θ_v = F⁻¹θ_v for v ∈ W.

	Returns:
	  * dual_frame: (ndarray) n×|W| matrix whose j-th column is Θ_v for the j-th member v of W
	  * vertices: (list) the members of W in column order
	  * report: (FrameReport)

	Notes:
		Every f in PW_ω satisfies f = Σ_{v∈W} f(v)Θ_v.
	'''
	status = frame_bounds(spec, omega, w, rank_tol)
	if status.error():
		return status
	report = status['report']
	if not report.is_sampling_set():
		return RetVal(NotASamplingSet, f"lower frame bound {report.lower_bound!r} does not exceed "
			f"rank_tol {rank_tol!r}")

	basis, sampled = _sampled_basis(spec, omega, w)
	try:
		factor = scipy.linalg.cho_factor(sampled.T @ sampled)
		dual = basis @ scipy.linalg.cho_solve(factor, sampled.T)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal().set_values({
		'dual_frame': dual,
		'vertices': w.as_list(),
		'report': report,
	})


def apply_frame_operator(spec: Spectrum, omega: float, w: VertexSet, f) -> RetVal:
	'''Applies the frame operator Ff = Σ_{v∈W} ⟨f, θ_v⟩θ_v.

	Returns:
	  * signal: (ndarray)
	'''
	if not w.is_valid(spec.n):
		return RetVal(VertexOutOfRange, f"{w} has vertices outside 0..{spec.n - 1}")
	f = np.asarray(f)
	if f.shape != (spec.n,):
		return RetVal(SampleIndexMismatch, f"signal has shape {f.shape}, expected ({spec.n},)")

	basis, sampled = _sampled_basis(spec, omega, w)
	return RetVal().set_value('signal', basis @ (sampled.T @ (sampled @ (basis.T @ f))))


def reconstruct(spec: Spectrum, omega: float, w: VertexSet, samples,
	rank_tol: float=DEFAULT_RANK_TOL) -> RetVal:
	'''Reconstructs a signal of PW_ω from its values on W.

	Parameters:
	  * samples: values at the members of W, in ascending vertex order

	Returns:
	  * signal: (ndarray) Σ_{v∈W} samples(v)·Θ_v

	Notes:
		This solves E_W c = samples in the least-squares sense and returns E c, which equals the
		dual frame expansion. Consistent samples are reproduced exactly; inconsistent samples
		yield the in-band least-squares fit, with error at most ‖e‖/√A for a perturbation e.
	'''
	samples = np.asarray(samples)
	if samples.shape != (len(w),):
		return RetVal(SampleIndexMismatch,
			f"got {samples.shape} samples for a sampling set of size {len(w)}")

	status = frame_bounds(spec, omega, w, rank_tol)
	if status.error():
		return status
	if not status['report'].is_sampling_set():
		return RetVal(NotASamplingSet, f"lower frame bound {status['report'].lower_bound!r} does "
			f"not exceed rank_tol {rank_tol!r}")

	basis, sampled = _sampled_basis(spec, omega, w)
	try:
		coeffs, _, _, _ = scipy.linalg.lstsq(sampled, samples)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal().set_values({ 'signal': basis @ coeffs, 'report': status['report'] })


def partial_reconstructions(spec: Spectrum, omega: float, w: VertexSet, samples, order: list,
	rank_tol: float=DEFAULT_RANK_TOL) -> RetVal:
	'''Accumulates the dual frame expansion one vertex at a time in the given enumeration order.

	Parameters:
	  * samples: values at the members of W, in ascending vertex order
	  * order: a permutation of the members of W

	Returns:
	  * residuals: (list) ‖f_k − f_full‖₂ after each of the |W| partial sums
	  * signal: (ndarray) the full sum
	'''
	samples = np.asarray(samples)
	if sorted(order) != w.as_list():
		return RetVal(ErrBadValue, 'order must be a permutation of the sampling set')
	if samples.shape != (len(w),):
		return RetVal(SampleIndexMismatch,
			f"got {samples.shape} samples for a sampling set of size {len(w)}")

	status = dual_frame(spec, omega, w, rank_tol)
	if status.error():
		return status
	dual = status['dual_frame']

	column = { v: j for j, v in enumerate(w.members) }
	full = dual @ samples
	partial = np.zeros(spec.n, dtype=np.result_type(dual, samples))
	residuals = []
	for v in order:
		j = column[v]
		partial = partial + samples[j] * dual[:, j]
		residuals.append(float(np.linalg.norm(partial - full)))

	return RetVal().set_values({ 'residuals': residuals, 'signal': partial })


def stability_certificate(g: Graph, spec: Spectrum, omega: float, s: VertexSet, probes: int=100,
	seed: int=0, rank_tol: float=DEFAULT_RANK_TOL, slack: float=DEFAULT_CERTIFICATE_SLACK,
	laplacian: np.ndarray=None) -> RetVal:
	'''Certifies that W = V∖S is a stable sampling set for PW_ω when S is a λ-set with λω < 1.

	Parameters:
	  * probes: number of random signals of PW_ω used to check the norm chain
	  * seed: seed of the first probe; probe i uses seed + i

	Returns:
	  * certificate: (StabilityCertificate) with 'verified' set from the empirical checks

	Notes:
		λ is taken as the minimal constant of S. An empty S removes nothing and yields the trivial
		certificate with W = V, A = B = 1 and c_ω = 1.
	'''
	status = minimal_lambda(g, s, laplacian)
	if status.error() == EmptySet:
		lam = 0.0
	elif status.error():
		return status
	else:
		lam = status['certificate'].lambda_min

	if lam * omega >= 1.0:
		return RetVal(BandTooWide, f"λω = {lam * omega!r} is not below 1")

	w = complement(s, g.n)
	status = frame_bounds(spec, omega, w, rank_tol)
	if status.error():
		return status
	report = status['report']

	cert = StabilityCertificate(s, lam, omega, spec.omega_max, report)

	verified = report.is_sampling_set() \
		and report.c_omega_empirical <= cert.c_omega_theoretical * (1.0 + slack)
	for i in range(probes):
		status = random_bandlimited(spec, omega, seed + i)
		if status.error():
			return status
		f = status['signal']
		full_norm = float(np.linalg.norm(f))
		w_norm = sampled_norm(f, w)

		if w_norm > full_norm * (1.0 + slack):
			verified = False
		if w_norm > 0:
			cert.worst_ratio = max(cert.worst_ratio, full_norm / w_norm)
		if full_norm > cert.c_omega_theoretical * w_norm * (1.0 + slack):
			verified = False

	cert.probes = probes
	cert.verified = verified
	if not verified:
		logger.warning(f"stability certificate failed for S={s.as_list()} at omega={omega!r}")

	return RetVal().set_value('certificate', cert)


def uniqueness_from_lambda_set(g: Graph, spec: Spectrum, omega: float, s: VertexSet,
	rank_tol: float=DEFAULT_RANK_TOL, laplacian: np.ndarray=None) -> RetVal:
	'''Checks the corollary that V∖S is a uniqueness set for PW_ω whenever S is a λ-set with
	λω < 1.

	Returns:
	  * applies: (bool) whether λ_min(S)·ω < 1
	  * is_uniqueness_set: (bool) whether V∖S is a uniqueness set
	'''
	status = minimal_lambda(g, s, laplacian)
	if status.error():
		return status
	lam = status['certificate'].lambda_min

	status = is_uniqueness_set(spec, omega, complement(s, g.n), rank_tol)
	if status.error():
		return status

	return RetVal().set_values({
		'applies': bool(lam * omega < 1.0),
		'is_uniqueness_set': status['is_uniqueness_set'],
	})


def full_space_counterexample(spec: Spectrum, w: VertexSet, rank_tol: float=DEFAULT_RANK_TOL) \
	-> RetVal:
	'''Checks that a proper subset W never samples PW_{ω_max} = L²(G).

	Returns:
	  * holds: (bool) true if W is proper and not a uniqueness set for the whole space
	'''
	if len(w) >= spec.n:
		return RetVal(ErrBadValue, 'W must be a proper subset')

	status = is_uniqueness_set(spec, spec.omega_max, w, rank_tol)
	if status.error():
		return status

	return RetVal().set_value('holds', not status['is_uniqueness_set'])


def characterization_gap(lambda_min: float, omega: float, c_omega: float) -> dict:
	'''Reports where a sampling set's complement sits between the sufficient condition λω < 1 and
	the necessary bound λω ≤ 1 + c_ω.'''
	lambda_omega = lambda_min * omega
	return {
		'lambda_omega': lambda_omega,
		'necessary_limit': 1.0 + c_omega,
		'meets_sufficient_condition': bool(lambda_omega < 1.0),
	}


def lambda_bound_from_sampling(g: Graph, spec: Spectrum, omega: float, w: VertexSet,
	rank_tol: float=DEFAULT_RANK_TOL, slack: float=DEFAULT_CERTIFICATE_SLACK,
	laplacian: np.ndarray=None) -> RetVal:
	'''Certifies that the complement of a sampling set W is a λ-set with λ ≤ (1 + c_ω)/ω.

	Returns:
	  * lambda_bound: (float) (1 + c_ω)/ω with c_ω = 1/√A
	  * verified: (bool) whether λ_min(V∖W) ≤ lambda_bound·(1 + slack). This must always be true.
	  * c_omega: (float)
	  * certificate: (LambdaCertificate) of V∖W
	  * report: (FrameReport) of W
	  * gap: (dict) see characterization_gap()
	'''
	if not omega > 0:
		return RetVal(ZeroBandwidth, 'the λ bound needs a positive bandwidth')

	status = frame_bounds(spec, omega, w, rank_tol)
	if status.error():
		return status
	report = status['report']

	s = complement(w, g.n)
	if s.is_empty():
		return RetVal(ComplementEmpty, 'W = V, so there is no complement to certify')
	if not report.is_sampling_set():
		return RetVal(NotASamplingSet, f"lower frame bound {report.lower_bound!r} does not exceed "
			f"rank_tol {rank_tol!r}")

	c_omega = report.c_omega_empirical
	lambda_bound = (1.0 + c_omega) / omega

	status = minimal_lambda(g, s, laplacian)
	if status.error():
		return status
	cert = status['certificate']

	verified = bool(cert.lambda_min <= lambda_bound * (1.0 + slack))
	if not verified:
		logger.warning(f"complement of W={w.as_list()} has lambda_min {cert.lambda_min!r} above "
			f"the bound {lambda_bound!r}")

	return RetVal().set_values({
		'lambda_bound': lambda_bound,
		'verified': verified,
		'c_omega': c_omega,
		'certificate': cert,
		'report': report,
		'gap': characterization_gap(cert.lambda_min, omega, c_omega),
	})
