import inspect
import itertools
import math

import numpy as np

from pwgs.errorcodes import EmptySet, FullVertexSet, NoFiniteLambda, NotIndependent, \
	OverlappingClosures, VertexOutOfRange, InvalidParameter
from pwgs.graph import VertexSet, generate, is_independent
import pwgs.lambdacert as lambdacert
from pwgs.spectral import laplacian_matrix

def funcname() -> str:
	frames = inspect.getouterframes(inspect.currentframe())
	return frames[1].function


def test_minimal_lambda_examples():
	'''Tests the hand-computed constants on P3 and C4'''
	p3 = generate('path', n=3)['graph']
	status = lambdacert.minimal_lambda(p3, VertexSet([0]))
	assert not status.error(), f"{funcname()}: minimal_lambda failed: {status.info()}"
	cert = status['certificate']
	assert abs(cert.lambda_min - math.sqrt(2.0 / 3.0)) <= 1e-10, \
		f"{funcname()}: λ_min({{0}}) on P3 is {cert.lambda_min}"

	c4 = generate('cycle', n=4)['graph']
	cert = lambdacert.minimal_lambda(c4, VertexSet([0, 2]))['certificate']
	assert abs(cert.lambda_min - 1.0) <= 1e-10, \
		f"{funcname()}: λ_min({{0,2}}) on C4 is {cert.lambda_min}"


def test_witness():
	'''Tests that the witness is a unit signal on S attaining the constant'''
	g = generate('lattice_box', dims=[4, 4])['graph']
	laplacian = laplacian_matrix(g)
	s = VertexSet([0, 1, 5, 10, 15])
	cert = lambdacert.minimal_lambda(g, s, laplacian)['certificate']

	outside = [ v for v in range(g.n) if v not in s ]
	assert np.all(cert.witness[outside] == 0), f"{funcname()}: witness leaves the set"
	assert abs(np.linalg.norm(cert.witness) - 1.0) <= 1e-12, f"{funcname()}: witness not unit"
	assert abs(np.linalg.norm(laplacian @ cert.witness) - cert.sigma_min) <= 1e-12, \
		f"{funcname()}: witness does not attain σ_min"
	assert cert.lambda_min == 1.0 / cert.sigma_min, f"{funcname()}: λ_min is not 1/σ_min"


def test_minimal_lambda_errors():
	'''Tests the empty set, the full vertex set and bad vertices'''
	g = generate('path', n=4)['graph']
	status = lambdacert.minimal_lambda(g, VertexSet())
	assert status.error() == EmptySet, f"{funcname()}: empty set not reported"
	assert status['vacuous'], f"{funcname()}: empty set not marked vacuous"

	status = lambdacert.minimal_lambda(g, VertexSet(range(4)))
	assert status.error() == NoFiniteLambda, f"{funcname()}: S = V has a finite constant"
	assert status['cause'] == FullVertexSet, f"{funcname()}: S = V cause not given"

	assert lambdacert.minimal_lambda(g, VertexSet([7])).error() == VertexOutOfRange, \
		f"{funcname()}: bad vertex accepted"


def test_is_lambda_set():
	'''Tests λ-set checks on both sides of the minimal constant'''
	g = generate('path', n=3)['graph']
	s = VertexSet([0])
	lam = math.sqrt(2.0 / 3.0)
	assert lambdacert.is_lambda_set(g, s, lam)['is_lambda_set'], \
		f"{funcname()}: the minimal constant failed"
	assert lambdacert.is_lambda_set(g, s, 1.0)['is_lambda_set'], \
		f"{funcname()}: a larger constant failed"
	assert not lambdacert.is_lambda_set(g, s, 0.8)['is_lambda_set'], \
		f"{funcname()}: a smaller constant passed"
	assert lambdacert.is_lambda_set(g, s, 0.0).error() == InvalidParameter, \
		f"{funcname()}: λ = 0 accepted"


def test_independent_sets_exhaustive():
	'''Tests that every independent set of the small family members has λ_min ≤ 1'''
	graphs = [
		generate('path', n=7)['graph'],
		generate('cycle', n=8)['graph'],
		generate('complete', n=5)['graph'],
		generate('lattice_box', dims=[2, 4])['graph'],
		generate('radial_tree', branching=[2, 2])['graph'],
	]
	for g in graphs:
		laplacian = laplacian_matrix(g)
		for size in range(1, g.n):
			for combo in itertools.combinations(range(g.n), size):
				s = VertexSet(combo)
				if not is_independent(g, s):
					continue
				status = lambdacert.check_independent_lemma(g, s, laplacian=laplacian)
				assert not status.error(), f"{funcname()}: check failed: {status.info()}"
				assert status['holds'], f"{funcname()}: {s} on {g} has λ_min " \
					f"{status['certificate'].lambda_min}"


def test_independent_sets_seeded():
	'''Tests seeded independent sets of a larger random graph'''
	g = generate('random_connected', n=40, p=0.06, seed=9)['graph']
	laplacian = laplacian_matrix(g)
	for seed in range(100):
		rng = np.random.default_rng(seed)
		chosen = set()
		for v in rng.permutation(g.n).tolist():
			if not chosen.intersection(g.neighbors(v)):
				chosen.add(v)
		s = VertexSet(rng.choice(sorted(chosen), size=int(rng.integers(1, len(chosen) + 1)),
			replace=False).tolist())
		status = lambdacert.check_independent_lemma(g, s, laplacian=laplacian)
		assert status['holds'], f"{funcname()}: seed {seed} broke the bound"

	status = lambdacert.check_independent_lemma(g, VertexSet(g.edges()[0]))
	assert status.error() == NotIndependent, f"{funcname()}: adjacent pair accepted"


def test_union_lambda_bound():
	'''Tests unions of λ-sets with disjoint closures'''
	g = generate('path', n=9)['graph']
	subsets = [ VertexSet([0]), VertexSet([4, 5]), VertexSet([8]) ]
	lambdas = [ lambdacert.minimal_lambda(g, s)['certificate'].lambda_min for s in subsets ]

	status = lambdacert.union_lambda_bound(g, subsets, lambdas)
	assert not status.error(), f"{funcname()}: union_lambda_bound failed: {status.info()}"
	assert status['verified'], f"{funcname()}: union is not a max(λ_j)-set"
	assert status['lambda_union'] == max(lambdas), f"{funcname()}: wrong λ_union"
	assert abs(status['certificate'].lambda_min - max(lambdas)) <= 1e-10, \
		f"{funcname()}: the union constant should equal the largest part"

	status = lambdacert.union_lambda_bound(g, [ VertexSet([0]), VertexSet([2]) ], [1.0, 1.0])
	assert status.error() == OverlappingClosures, f"{funcname()}: overlapping closures accepted"

	status = lambdacert.union_lambda_bound(g, [ VertexSet([0]), VertexSet([4]) ], [0.1, 1.0])
	assert status.error() == InvalidParameter, f"{funcname()}: understated λ_j accepted"


def test_lambda_monotone():
	'''Tests that λ_min grows with the set on seeded nested pairs'''
	g = generate('lattice_box', dims=[5, 5])['graph']
	laplacian = laplacian_matrix(g)
	for seed in range(100):
		rng = np.random.default_rng(seed)
		larger = rng.choice(g.n, size=int(rng.integers(1, g.n)), replace=False)
		smaller = rng.choice(larger, size=int(rng.integers(1, len(larger) + 1)), replace=False)
		lam_small = lambdacert.minimal_lambda(g, VertexSet(smaller.tolist()),
			laplacian)['certificate'].lambda_min
		lam_large = lambdacert.minimal_lambda(g, VertexSet(larger.tolist()),
			laplacian)['certificate'].lambda_min
		assert lam_small <= lam_large * (1 + 1e-9), f"{funcname()}: seed {seed} not monotone"


def test_certificate_flatten():
	'''Tests the exported certificate layout'''
	g = generate('path', n=3)['graph']
	cert = lambdacert.minimal_lambda(g, VertexSet([0]))['certificate']
	out = cert.flatten('BLAKE3-256:abc')
	assert out['subset'] == [0], f"{funcname()}: wrong subset"
	assert out['lambda_min'] == cert.lambda_min, f"{funcname()}: wrong λ_min"
	assert len(out['witness']) == 3, f"{funcname()}: witness not exported over V"
	assert out['graph_hash'] == 'BLAKE3-256:abc', f"{funcname()}: graph hash missing"


if __name__ == '__main__':
	test_minimal_lambda_examples()
	test_witness()
	test_minimal_lambda_errors()
	test_is_lambda_set()
	test_independent_sets_exhaustive()
	test_independent_sets_seeded()
	test_union_lambda_bound()
	test_lambda_monotone()
	test_certificate_flatten()
