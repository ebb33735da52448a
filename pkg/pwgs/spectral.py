'''The spectral module implements the normalized graph Laplacian, its eigendecomposition and the
Paley-Wiener projections built on top of it.

Signals are numpy vectors indexed by vertex id. They may be complex; the eigenbasis is always real
because the Laplacian is real symmetric.

The Laplacian applied to a signal f is

	Lf(v) = (1/√d(v)) Σ_{u∼v} (f(v)/√d(v) − f(u)/√d(u))

and PW_ω(G) is the span of the eigenvectors whose eigenvalue lies in [0, ω]. Band membership is
inclusive up to a tie tolerance of tie_tol_factor·max(1, ω_max) so eigenvalues sitting on the
cutoff don't flap in and out of the band.
'''

import numpy as np
import scipy.linalg
import scipy.sparse
from loguru import logger
from retval import RetVal, ErrBadData

from pwgs.errorcodes import DimensionMismatch, SizeLimitExceeded, EmptyBand, VertexOutOfRange, \
	InvalidParameter, ZeroBandwidth
from pwgs.graph import Graph, VertexSet

DEFAULT_TIE_TOL_FACTOR = 1e-9
DEFAULT_DENSE_LIMIT = 5000


class Spectrum:
	'''Ascending eigenvalues and the matching orthonormal eigenvectors of a normalized Laplacian.

	Notes:
		eigenvectors[:, i] belongs to eigenvalues[i]. Both arrays are read-only. Any orthonormal
		basis of a degenerate eigenspace is acceptable; only the band subspaces are meaningful.
	'''
	def __init__(self, eigenvalues, eigenvectors, tie_tol_factor: float=DEFAULT_TIE_TOL_FACTOR):
		eigenvalues = np.array(eigenvalues, dtype=float)
		eigenvectors = np.array(eigenvectors, dtype=float)
		if eigenvectors.shape != (len(eigenvalues), len(eigenvalues)):
			raise ValueError('eigenvectors must be a square matrix matching the eigenvalues')

		eigenvalues.flags.writeable = False
		eigenvectors.flags.writeable = False

		self.n = len(eigenvalues)
		self.eigenvalues = eigenvalues
		self.eigenvectors = eigenvectors
		self.omega_max = float(eigenvalues[-1])
		self.tie_tol_factor = tie_tol_factor
		self.tie_tol = tie_tol_factor * max(1.0, self.omega_max)

	def __repr__(self) -> str:
		return f"Spectrum(n={self.n}, omega_max={self.omega_max!r})"

	def band_mask(self, omega: float) -> np.ndarray:
		'''Returns a boolean mask of the eigenvalues inside [0, omega]'''
		return self.eigenvalues <= omega + self.tie_tol

	def band_basis(self, omega: float) -> np.ndarray:
		'''Returns the n×k matrix E of in-band eigenvectors'''
		return self.eigenvectors[:, self.band_mask(omega)]

	def as_dict(self) -> dict:
		'''Returns the spectrum in the JSON export layout'''
		return {
			'n': self.n,
			'eigenvalues': self.eigenvalues.tolist(),
			'omega_max': self.omega_max,
			'tie_tol': self.tie_tol,
			'tie_tol_factor': self.tie_tol_factor,
			'solver': 'scipy.linalg.eigh',
		}


def _inv_sqrt_degrees(g: Graph) -> np.ndarray:
	return 1.0 / np.sqrt(np.array(g.degrees, dtype=float))


def _adjacency(g: Graph) -> scipy.sparse.csr_matrix:
	rows = np.repeat(np.arange(g.n), g.degrees)
	cols = np.fromiter((v for nbrs in g.adjacency for v in nbrs), dtype=int, count=int(sum(g.degrees)))
	return scipy.sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))


def _check_signal(f, n: int) -> RetVal:
	f = np.asarray(f)
	if f.ndim != 1 or f.shape[0] != n:
		return RetVal(DimensionMismatch, f"signal has shape {f.shape}, expected ({n},)")
	if not np.all(np.isfinite(f)):
		return RetVal(ErrBadData, 'signal has non-finite entries')
	return RetVal()


def _check_omega(omega: float) -> RetVal:
	if not np.isfinite(omega) or omega < 0:
		return RetVal(InvalidParameter, f"bandwidth must be a finite nonnegative number, got {omega}")
	return RetVal()


def apply_laplacian(g: Graph, f) -> RetVal:
	'''Applies the normalized Laplacian to a signal without assembling a dense matrix.

	Returns:
	  * signal: (ndarray) Lf
	'''
	status = _check_signal(f, g.n)
	if status.error():
		return status

	f = np.asarray(f)
	dinv = _inv_sqrt_degrees(g)
	out = f - dinv * (_adjacency(g) @ (dinv * f))
	return RetVal().set_value('signal', out)


def laplacian_matrix(g: Graph) -> np.ndarray:
	'''Returns the dense normalized Laplacian I − D^(-1/2) A D^(-1/2)'''
	dinv = _inv_sqrt_degrees(g)
	out = -(dinv[:, None] * _adjacency(g).toarray() * dinv[None, :])
	np.fill_diagonal(out, 1.0)
	return out


def compute_spectrum(g: Graph, dense_limit: int=DEFAULT_DENSE_LIMIT,
	tie_tol_factor: float=DEFAULT_TIE_TOL_FACTOR) -> RetVal:
	'''Computes the full eigendecomposition of the normalized Laplacian.

	Parameters:
	  * g: the graph
	  * dense_limit: largest vertex count accepted by the dense solver
	  * tie_tol_factor: relative tolerance for band membership

	Returns:
	  * spectrum: (Spectrum) ascending eigenvalues with an orthonormal eigenbasis
	'''
	if g.n > dense_limit:
		return RetVal(SizeLimitExceeded,
			f"graph has {g.n} vertices, the dense solver limit is {dense_limit}")

	logger.debug(f"computing dense eigendecomposition for n={g.n}")
	try:
		eigenvalues, eigenvectors = scipy.linalg.eigh(laplacian_matrix(g))
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal().set_value('spectrum', Spectrum(eigenvalues, eigenvectors, tie_tol_factor))


def spectrum_diagnostics(spec: Spectrum, laplacian: np.ndarray) -> dict:
	'''Measures how well a spectrum satisfies its invariants against the matrix it came from.

	Returns a dictionary with the orthonormality error (max entry of |UᵀU − I|), the relative
	Frobenius reassembly error, the smallest and largest eigenvalue, and the symmetry error of the
	matrix.'''
	basis = spec.eigenvectors
	reassembled = (basis * spec.eigenvalues) @ basis.T
	return {
		'orthonormality_error': float(np.max(np.abs(basis.T @ basis - np.eye(spec.n)))),
		'reassembly_error': float(np.linalg.norm(reassembled - laplacian)
			/ max(np.linalg.norm(laplacian), 1.0)),
		'min_eigenvalue': float(spec.eigenvalues[0]),
		'max_eigenvalue': spec.omega_max,
		'symmetry_error': float(np.max(np.abs(laplacian - laplacian.T))),
	}


def band_indices(spec: Spectrum, omega: float) -> list:
	'''Returns the indices of the eigenvalues in [0, ω], ascending'''
	return np.flatnonzero(spec.band_mask(omega)).tolist()


def pw_dimension(spec: Spectrum, omega: float) -> int:
	'''Returns the dimension of PW_ω, the number of eigenvalues in [0, ω]'''
	return len(band_indices(spec, omega))


def project_pw(spec: Spectrum, f, omega: float) -> RetVal:
	'''Orthogonally projects a signal onto PW_ω.

	Returns:
	  * signal: (ndarray) Σ_{τᵢ ≤ ω} ⟨f, uᵢ⟩ uᵢ
	'''
	status = _check_signal(f, spec.n)
	if status.error():
		return status
	status = _check_omega(omega)
	if status.error():
		return status

	basis = spec.band_basis(omega)
	return RetVal().set_value('signal', basis @ (basis.T @ np.asarray(f)))


def delta_projection(spec: Spectrum, omega: float, v: int) -> RetVal:
	'''Returns θ_v, the projection of the Dirac delta at v onto PW_ω. It reproduces point values:
	⟨f, θ_v⟩ = f(v) for every f in PW_ω.'''
	if not 0 <= v < spec.n:
		return RetVal(VertexOutOfRange, f"vertex {v} is outside 0..{spec.n - 1}")
	status = _check_omega(omega)
	if status.error():
		return status

	basis = spec.band_basis(omega)
	return RetVal().set_value('signal', basis @ basis[v, :])


def random_bandlimited(spec: Spectrum, omega: float, seed: int, complex_values: bool=False) \
	-> RetVal:
	'''Generates a random signal in PW_ω with standard-normal coefficients in the in-band
	eigenbasis. The result depends only on the spectrum, ω and the seed.'''
	status = _check_omega(omega)
	if status.error():
		return status

	basis = spec.band_basis(omega)
	if basis.shape[1] == 0:
		return RetVal(EmptyBand, f"no eigenvalues in [0, {omega}]")

	rng = np.random.default_rng(seed)
	coeffs = rng.standard_normal(basis.shape[1])
	if complex_values:
		coeffs = coeffs + 1j * rng.standard_normal(basis.shape[1])

	return RetVal().set_value('signal', basis @ coeffs)


def sampled_norm(f, w: VertexSet) -> float:
	'''Returns ‖f‖_W, the ℓ² norm of f restricted to the vertices of w'''
	return float(np.linalg.norm(np.asarray(f)[list(w.members)]))


def out_of_band_residual(spec: Spectrum, phi, omega: float, laplacian: np.ndarray=None) -> RetVal:
	'''Measures how far a signal is from PW_ω against the bound ‖P_ωφ − φ‖₂ ≤ ‖Lφ‖₂/ω.

	Returns:
	  * residual: (float) ‖P_ωφ − φ‖₂
	  * bound: (float) ‖Lφ‖₂/ω
	'''
	if omega <= 0:
		return RetVal(ZeroBandwidth, 'the residual bound needs a positive bandwidth')

	status = project_pw(spec, phi, omega)
	if status.error():
		return status

	phi = np.asarray(phi)
	if laplacian is None:
		laplacian = (spec.eigenvectors * spec.eigenvalues) @ spec.eigenvectors.T

	return RetVal().set_values({
		'residual': float(np.linalg.norm(status['signal'] - phi)),
		'bound': float(np.linalg.norm(laplacian @ phi)) / omega,
	})


def omega_from_quantile(spec: Spectrum, q: float) -> RetVal:
	'''Returns the q-th quantile of the spectrum as a bandwidth'''
	if not 0.0 <= q <= 1.0:
		return RetVal(InvalidParameter, f"quantile must be in [0,1], got {q}")
	return RetVal().set_value('omega', float(np.quantile(spec.eigenvalues, q)))


def load_signal_csv(path: str, n: int, restrict: VertexSet=None) -> RetVal:
	'''Reads a signal CSV file with rows "vertex_id,real,imag". Vertices without a row read as 0.

	Parameters:
	  * path: the CSV file
	  * n: the vertex count of the graph
	  * restrict: if given, every row must belong to this set

	Returns:
	  * signal: (ndarray) complex signal of length n
	  * vertices: (VertexSet) the vertices which had a row
	'''
	try:
		rows = np.loadtxt(path, delimiter=',', ndmin=2, dtype=float)
	except Exception as e:
		return RetVal().wrap_exception(e)

	if rows.size == 0:
		rows = np.zeros((0, 3))
	if rows.shape[1] != 3:
		return RetVal(ErrBadData, f"expected 3 columns (vertex_id,real,imag), got {rows.shape[1]}")

	ids = rows[:, 0]
	if not np.all(ids == np.round(ids)):
		return RetVal(ErrBadData, 'vertex ids must be integers')
	ids = ids.astype(int)
	if len(set(ids.tolist())) != len(ids):
		return RetVal(ErrBadData, 'vertex ids must not repeat')
	if np.any(ids < 0) or np.any(ids >= n):
		return RetVal(VertexOutOfRange, f"signal has vertex ids outside 0..{n - 1}")

	present = VertexSet(ids.tolist())
	if restrict is not None and present.intersection(restrict) != present:
		return RetVal(VertexOutOfRange, 'signal has rows for vertices outside the allowed set')

	out = np.zeros(n, dtype=complex)
	out[ids] = rows[:, 1] + 1j * rows[:, 2]
	return RetVal().set_values({ 'signal': out, 'vertices': present })


def save_signal_csv(path: str, f, vertices: VertexSet=None) -> RetVal:
	'''Writes a signal as CSV rows "vertex_id,real,imag", optionally only for some vertices'''
	f = np.asarray(f, dtype=complex)
	ids = np.arange(len(f)) if vertices is None else np.array(vertices.as_list(), dtype=int)
	rows = np.column_stack([ ids, f[ids].real, f[ids].imag ]) if len(ids) else np.zeros((0, 3))
	try:
		np.savetxt(path, rows, delimiter=',', fmt=[ '%d', '%.17g', '%.17g' ])
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal()
