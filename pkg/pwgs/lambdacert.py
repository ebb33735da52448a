'''This module computes Poincaré constants for vertex subsets.

A set S is a λ-set if every signal φ supported on S satisfies ‖φ‖₂ ≤ λ‖Lφ‖₂. Signals on S are
zero-extended to the whole graph before L is applied. The smallest such λ is 1/σ_min, where σ_min
is the smallest singular value of the n×|S| matrix whose columns are L applied to the deltas of S.
'''

import numpy as np
import scipy.linalg
from loguru import logger
from retval import RetVal, ErrBadValue

from pwgs.errorcodes import EmptySet, FullVertexSet, NoFiniteLambda, NotIndependent, \
	OverlappingClosures, VertexOutOfRange, InvalidParameter
from pwgs.graph import Graph, VertexSet, boundary_and_closure, is_independent
from pwgs.spectral import laplacian_matrix

DEFAULT_SLACK = 1e-9


class LambdaCertificate:
	'''The minimal Poincaré constant of a vertex set together with the signal attaining it.

	Notes:
		lambda_min is always 1/sigma_min and is strictly positive. The witness is a unit-norm
		signal supported on the subset with ‖L·witness‖₂ = sigma_min.
	'''
	def __init__(self, subset: VertexSet, sigma_min: float, witness) -> None:
		self.subset = subset
		self.sigma_min = float(sigma_min)
		self.lambda_min = 1.0 / self.sigma_min
		self.witness = np.array(witness)
		self.witness.flags.writeable = False

	def __repr__(self) -> str:
		return f"LambdaCertificate(subset={self.subset.as_list()}, lambda_min={self.lambda_min!r})"

	def flatten(self, graph_hash: str='') -> dict:
		'''Returns the certificate in the JSON export layout'''
		return {
			'subset': self.subset.as_list(),
			'lambda_min': self.lambda_min,
			'sigma_min': self.sigma_min,
			'witness': self.witness.tolist(),
			'graph_hash': graph_hash,
		}


def minimal_lambda(g: Graph, s: VertexSet, laplacian: np.ndarray=None) -> RetVal:
	'''Computes the smallest λ for which s is a λ-set.

	Parameters:
	  * g: the graph
	  * s: a nonempty proper subset of the vertices
	  * laplacian: the dense Laplacian of g, if the caller already has it

	Returns:
	  * certificate: (LambdaCertificate) the minimal constant and its witness

	Notes:
		The empty set is vacuously a λ-set for every λ, which is reported as the EmptySet error
		with the 'vacuous' field set so that lambda_min stays positive. The full vertex set has no
		finite constant because v ↦ √d(v) lies in the kernel of L.
	'''
	if not s.is_valid(g.n):
		return RetVal(VertexOutOfRange, f"{s} has vertices outside 0..{g.n - 1}")
	if s.is_empty():
		return RetVal(EmptySet, 'the empty set is vacuously a λ-set').set_value('vacuous', True)
	if len(s) == g.n:
		return RetVal(NoFiniteLambda, 'S = V: the kernel of L is spanned by √d, so no finite λ '
			'exists').set_value('cause', FullVertexSet)

	if laplacian is None:
		laplacian = laplacian_matrix(g)

	columns = laplacian[:, list(s.members)]
	try:
		_, singular_values, vh = scipy.linalg.svd(columns, full_matrices=False)
	except Exception as e:
		return RetVal().wrap_exception(e)

	sigma_min = float(singular_values[-1])
	if sigma_min <= 0.0:
		return RetVal(NoFiniteLambda, f"L restricted to {s} is singular")

	witness = np.zeros(g.n)
	witness[list(s.members)] = vh[-1, :]

	return RetVal().set_value('certificate', LambdaCertificate(s, sigma_min, witness))


def is_lambda_set(g: Graph, s: VertexSet, lam: float, slack: float=DEFAULT_SLACK,
	laplacian: np.ndarray=None) -> RetVal:
	'''Checks whether s is a λ-set for the given λ.

	Returns:
	  * is_lambda_set: (bool) true iff lambda_min ≤ λ·(1 + slack)
	  * certificate: (LambdaCertificate) attached whether or not the check passes
	'''
	if not lam > 0:
		return RetVal(InvalidParameter, f"λ must be positive, got {lam}")

	status = minimal_lambda(g, s, laplacian)
	if status.error():
		return status

	cert = status['certificate']
	return RetVal().set_values({
		'is_lambda_set': bool(cert.lambda_min <= lam * (1.0 + slack)),
		'certificate': cert,
	})


def check_independent_lemma(g: Graph, s: VertexSet, slack: float=DEFAULT_SLACK,
	laplacian: np.ndarray=None) -> RetVal:
	'''Checks that an independent set is a λ-set with λ = 1.

	Returns:
	  * holds: (bool) the outcome of is_lambda_set(g, s, 1). This must always be true.
	  * certificate: (LambdaCertificate)
	'''
	if not s.is_valid(g.n):
		return RetVal(VertexOutOfRange, f"{s} has vertices outside 0..{g.n - 1}")
	if not is_independent(g, s):
		return RetVal(NotIndependent, f"{s} contains adjacent vertices")

	status = is_lambda_set(g, s, 1.0, slack, laplacian)
	if status.error():
		return status

	if not status['is_lambda_set']:
		logger.warning(f"independent set {s.as_list()} has lambda_min "
			f"{status['certificate'].lambda_min!r} > 1")

	return RetVal().set_values({
		'holds': status['is_lambda_set'],
		'certificate': status['certificate'],
	})


def union_lambda_bound(g: Graph, subsets: list, lambdas: list, slack: float=DEFAULT_SLACK,
	laplacian: np.ndarray=None) -> RetVal:
	'''Checks that a union of λ_j-sets with pairwise disjoint closures is a max(λ_j)-set.

	Returns:
	  * lambda_union: (float) max_j λ_j
	  * verified: (bool) whether the union is a λ_union-set. This must always be true.
	  * certificate: (LambdaCertificate) the certificate of the union
	'''
	if not subsets or len(subsets) != len(lambdas):
		return RetVal(ErrBadValue, 'need one λ per subset and at least one subset')

	if laplacian is None:
		laplacian = laplacian_matrix(g)

	closures = []
	for s in subsets:
		status = boundary_and_closure(g, s)
		if status.error():
			return status
		closures.append(set(status['closure'].members))

	for i in range(len(closures)):
		for j in range(i + 1, len(closures)):
			shared = closures[i] & closures[j]
			if shared:
				return RetVal(OverlappingClosures,
					f"closures of subsets {i} and {j} share vertices {sorted(shared)}")

	for s, lam in zip(subsets, lambdas):
		status = is_lambda_set(g, s, lam, slack, laplacian)
		if status.error():
			return status
		if not status['is_lambda_set']:
			return RetVal(InvalidParameter, f"{s} is not a λ-set for λ = {lam}")

	lambda_union = float(max(lambdas))
	union = VertexSet()
	for s in subsets:
		union = union.union(s)

	status = is_lambda_set(g, union, lambda_union, slack, laplacian)
	if status.error():
		return status

	return RetVal().set_values({
		'lambda_union': lambda_union,
		'verified': status['is_lambda_set'],
		'certificate': status['certificate'],
	})
