'''This module houses the graph and vertex set types along with the graph families used throughout
the library.

Graphs are undirected, unweighted and simple, with vertices identified by the dense integer ids
0..n-1. Every Graph instance handed out by this module has passed the structural assumptions the
sampling theory depends on:

	1. the graph is connected
	2. the vertex set is countable (finite here; infinite graphs are studied through truncations)
	3. there are no loops
	4. there are no multi-edges
	5. edges are undirected and uniformly weighted
	6. the maximum degree d(G) is finite and at least 1
'''

import json

import jsonschema
import networkx as nx
import numpy as np
from retval import RetVal, ErrBadData, ErrBadValue

from pwgs.errorcodes import LoopEdge, DuplicateEdge, Disconnected, EmptyGraph, \
	VertexOutOfRange, InvalidParameter
from pwgs.hash import hashjson
from pwgs import schemas

FAMILIES = [ 'path', 'cycle', 'complete', 'lattice_box', 'radial_tree', 'random_connected' ]


class Graph:
	'''Immutable adjacency structure of a validated graph.

	Notes:
		Instances should be obtained from build_graph() or generate(). The constructor only
		normalizes the adjacency lists and does not check the graph assumptions.
	'''
	def __init__(self, n: int, adjacency) -> None:
		if n != len(adjacency):
			raise ValueError('adjacency must have one neighbor list per vertex')

		self.n = n
		self.adjacency = tuple(tuple(sorted(nbrs)) for nbrs in adjacency)
		self.degrees = tuple(len(nbrs) for nbrs in self.adjacency)
		self.max_degree = max(self.degrees) if self.degrees else 0

	def __eq__(self, other) -> bool:
		if not isinstance(other, Graph):
			return NotImplemented
		return self.n == other.n and self.adjacency == other.adjacency

	def __hash__(self) -> int:
		return hash((self.n, self.adjacency))

	def __repr__(self) -> str:
		return f"Graph(n={self.n}, edges={len(self.edges())}, d(G)={self.max_degree})"

	def neighbors(self, v: int) -> tuple:
		'''Returns the sorted neighbor ids of vertex v'''
		return self.adjacency[v]

	def edges(self) -> list:
		'''Returns the edge list as sorted (u, v) pairs with u < v'''
		return [ (u, v) for u in range(self.n) for v in self.adjacency[u] if u < v ]

	def as_dict(self) -> dict:
		'''Returns the graph in the JSON file layout'''
		return { 'n': self.n, 'edges': [ [u, v] for u, v in self.edges() ] }

	def as_networkx(self) -> nx.Graph:
		'''Returns a networkx copy of the graph'''
		out = nx.Graph()
		out.add_nodes_from(range(self.n))
		out.add_edges_from(self.edges())
		return out


class VertexSet:
	'''An immutable, sorted, duplicate-free set of vertex ids.

	Notes:
		The ids are not checked against a graph here; use make_vertex_set() or is_valid() for that.
	'''
	def __init__(self, members=()) -> None:
		self.members = tuple(sorted(set(int(v) for v in members)))

	def __contains__(self, v) -> bool:
		return v in set(self.members)

	def __eq__(self, other) -> bool:
		if not isinstance(other, VertexSet):
			return NotImplemented
		return self.members == other.members

	def __hash__(self) -> int:
		return hash(self.members)

	def __iter__(self):
		return iter(self.members)

	def __len__(self) -> int:
		return len(self.members)

	def __repr__(self) -> str:
		return f"VertexSet({list(self.members)})"

	def is_empty(self) -> bool:
		'''Returns true if the set has no members'''
		return len(self.members) == 0

	def is_valid(self, n: int) -> bool:
		'''Returns true if all members are vertex ids of a graph with n vertices'''
		return all(0 <= v < n for v in self.members)

	def as_list(self) -> list:
		return list(self.members)

	def as_dict(self) -> dict:
		'''Returns the set in the JSON file layout'''
		return { 'vertices': list(self.members) }

	def union(self, other) -> 'VertexSet':
		return VertexSet(self.members + tuple(other))

	def intersection(self, other) -> 'VertexSet':
		others = set(other)
		return VertexSet(v for v in self.members if v in others)


def make_vertex_set(ids, n: int) -> RetVal:
	'''Creates a VertexSet and checks it against a graph with n vertices.

	Returns:
	  * set: (VertexSet) the validated set
	'''
	try:
		out = VertexSet(ids)
	except (TypeError, ValueError) as e:
		return RetVal().wrap_exception(e)

	if not out.is_valid(n):
		bad = [ v for v in out.members if not 0 <= v < n ]
		return RetVal(VertexOutOfRange, f"vertices {bad} are outside 0..{n - 1}")

	return RetVal().set_value('set', out)


def parse_vertex_list(text: str, n: int) -> RetVal:
	'''Parses a comma-separated list of vertex ids such as "0,1,5". An empty string yields the
	empty set.'''
	parts = [ x.strip() for x in text.split(',') if x.strip() ]
	try:
		ids = [ int(x) for x in parts ]
	except ValueError:
		return RetVal(ErrBadValue, f"bad vertex list '{text}'")

	return make_vertex_set(ids, n)


def complement(s: VertexSet, n: int) -> VertexSet:
	'''Returns V minus s for a graph with n vertices'''
	members = set(s.members)
	return VertexSet(v for v in range(n) if v not in members)


def build_graph(n: int, edges) -> RetVal:
	'''Builds a graph from its vertex count and an edge list, validating the graph assumptions.

	Parameters:
	  * n: the number of vertices, whose ids are 0..n-1
	  * edges: iterable of unordered (u, v) vertex pairs. Order is irrelevant.

	Returns:
	  * graph: (Graph) the validated graph

	Notes:
		Each error message names the assumption which was violated.
	'''
	if not isinstance(n, (int, np.integer)) or n < 0:
		return RetVal(InvalidParameter, 'vertex count must be a nonnegative integer')
	if n == 0:
		return RetVal(EmptyGraph, 'graph has no vertices (assumption 2 requires a vertex set)')
	n = int(n)

	adjacency = [ set() for _ in range(n) ]
	for edge in edges:
		if len(edge) != 2:
			return RetVal(ErrBadData, f"edge {edge} is not a vertex pair")
		u, v = int(edge[0]), int(edge[1])

		if not (0 <= u < n and 0 <= v < n):
			return RetVal(VertexOutOfRange, f"edge ({u},{v}) has an endpoint outside 0..{n - 1}")
		if u == v:
			return RetVal(LoopEdge, f"edge ({u},{v}) is a loop (assumption 3: no loops)")
		if v in adjacency[u]:
			return RetVal(DuplicateEdge,
				f"edge ({u},{v}) is repeated (assumption 4: no multi-edges)")

		adjacency[u].add(v)
		adjacency[v].add(u)

	out = Graph(n, adjacency)

	# Breadth-first traversal from vertex 0 must reach everything
	reached = nx.node_connected_component(out.as_networkx(), 0)
	if len(reached) != n:
		return RetVal(Disconnected, f"only {len(reached)} of {n} vertices are reachable from "
			"vertex 0 (assumption 1: connected)")

	if out.max_degree < 1:
		return RetVal(InvalidParameter, 'graph has no edges (assumption 6 requires d(G) >= 1)')

	return RetVal().set_value('graph', out)


def _from_networkx(source: nx.Graph) -> RetVal:
	relabeled = nx.convert_node_labels_to_integers(source, ordering='sorted')
	return build_graph(relabeled.number_of_nodes(), list(relabeled.edges()))


def generate(family: str, **params) -> RetVal:
	'''Generates a graph from one of the supported families.

	Parameters:
	  * family: one of the following, with its keyword parameters
			- path: n
			- cycle: n
			- complete: n
			- lattice_box: dims (list of side lengths), wraparound (bool, default False)
			- radial_tree: branching (children per vertex at each level, root first)
			- random_connected: n, p (extra edge probability), seed

	Returns:
	  * graph: (Graph) the validated graph

	Notes:
		lattice_box without wraparound has a free boundary and is how ℤⁿ is truncated. With
		wraparound it is a torus, so every side must be at least 3 to keep the graph simple.
	'''
	try:
		if family == 'path':
			n = int(params['n'])
			if n < 2:
				return RetVal(InvalidParameter, 'path needs at least 2 vertices')
			return _from_networkx(nx.path_graph(n))

		if family == 'cycle':
			n = int(params['n'])
			if n < 3:
				return RetVal(InvalidParameter, 'cycle needs at least 3 vertices')
			return _from_networkx(nx.cycle_graph(n))

		if family == 'complete':
			n = int(params['n'])
			if n < 2:
				return RetVal(InvalidParameter, 'complete graph needs at least 2 vertices')
			return _from_networkx(nx.complete_graph(n))

		if family == 'lattice_box':
			return _lattice_box([ int(x) for x in params['dims'] ],
				bool(params.get('wraparound', False)))

		if family == 'radial_tree':
			return _radial_tree([ int(x) for x in params['branching'] ])

		if family == 'random_connected':
			return _random_connected(int(params['n']), float(params['p']), int(params['seed']))

	except KeyError as e:
		return RetVal(InvalidParameter, f"family {family} requires parameter {e}")
	except (TypeError, ValueError) as e:
		return RetVal(InvalidParameter, f"bad parameter for family {family}: {e}")

	return RetVal(InvalidParameter, f"unknown graph family '{family}'")


def _lattice_box(dims: list, wraparound: bool) -> RetVal:
	if not dims:
		return RetVal(InvalidParameter, 'lattice_box needs at least one dimension')
	if any(x < 1 for x in dims):
		return RetVal(InvalidParameter, f"lattice_box side lengths must be positive, got {dims}")
	if wraparound and any(x < 3 for x in dims):
		return RetVal(InvalidParameter, 'lattice_box with wraparound needs every side >= 3')

	return _from_networkx(nx.grid_graph(dim=dims, periodic=wraparound))


def _radial_tree(branching: list) -> RetVal:
	if not branching:
		return RetVal(InvalidParameter, 'radial_tree needs at least one level')
	if any(b < 1 for b in branching):
		return RetVal(InvalidParameter,
			f"radial_tree branching factors must be positive, got {branching}")

	edges = []
	level = [ 0 ]
	next_id = 1
	for factor in branching:
		children = []
		for parent in level:
			for _ in range(factor):
				edges.append((parent, next_id))
				children.append(next_id)
				next_id += 1
		level = children

	return build_graph(next_id, edges)


def _random_connected(n: int, p: float, seed: int) -> RetVal:
	if n < 2:
		return RetVal(InvalidParameter, 'random_connected needs at least 2 vertices')
	if not 0.0 <= p <= 1.0:
		return RetVal(InvalidParameter, f"edge probability must be in [0,1], got {p}")
	if seed < 0:
		return RetVal(InvalidParameter, 'seed must be nonnegative')

	rng = np.random.default_rng(seed)

	# A uniformly random Prüfer sequence decodes to a uniform spanning tree of K_n
	tree = nx.from_prufer_sequence(rng.integers(0, n, size=n - 2).tolist())
	edges = set(tuple(sorted(e)) for e in tree.edges())

	for u in range(n):
		for v in range(u + 1, n):
			if (u, v) not in edges and rng.random() < p:
				edges.add((u, v))

	return build_graph(n, sorted(edges))


def boundary_and_closure(g: Graph, s: VertexSet) -> RetVal:
	'''Computes the vertex boundary bS and the closure S̄ = S ∪ bS.

	Returns:
	  * boundary: (VertexSet) vertices outside s adjacent to a vertex of s
	  * closure: (VertexSet) s together with its boundary
	'''
	if not s.is_valid(g.n):
		return RetVal(VertexOutOfRange, f"{s} has vertices outside 0..{g.n - 1}")

	inside = set(s.members)
	boundary = set()
	for u in s.members:
		boundary.update(v for v in g.adjacency[u] if v not in inside)

	return RetVal().set_values({
		'boundary': VertexSet(boundary),
		'closure': VertexSet(inside | boundary),
	})


def is_independent(g: Graph, s: VertexSet) -> bool:
	'''Returns true if no two members of s are adjacent, i.e. closure({v}) ∩ s = {v} for every
	v in s'''
	inside = set(s.members)
	return all(not inside.intersection(g.adjacency[v]) for v in s.members)


def maximal_independent_set(g: Graph, start: VertexSet=None) -> VertexSet:
	'''Greedily builds a maximal independent set, scanning vertices by ascending id. If start is
	given it must be independent and is extended.'''
	chosen = set(start.members) if start else set()
	blocked = set(chosen)
	for v in chosen:
		blocked.update(g.adjacency[v])

	for v in range(g.n):
		if v not in blocked:
			chosen.add(v)
			blocked.add(v)
			blocked.update(g.adjacency[v])

	return VertexSet(chosen)


def graph_from_dict(data: dict) -> RetVal:
	'''Validates a graph in the JSON file layout and builds it'''
	try:
		jsonschema.validate(data, schemas.graph_file)
	except jsonschema.ValidationError as e:
		return RetVal(ErrBadData, f"graph data does not match schema: {e.message}")

	return build_graph(data['n'], data['edges'])


def load_graph(path: str) -> RetVal:
	'''Loads and fully validates a graph JSON file'''
	try:
		with open(path, 'r', encoding='utf-8') as handle:
			data = json.load(handle)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return graph_from_dict(data)


def save_graph(g: Graph, path: str) -> RetVal:
	'''Writes a graph to a JSON file'''
	try:
		with open(path, 'w', encoding='utf-8') as handle:
			json.dump(g.as_dict(), handle)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal()


def load_vertex_set(path: str, n: int) -> RetVal:
	'''Loads a vertex set JSON file and checks it against a graph with n vertices'''
	try:
		with open(path, 'r', encoding='utf-8') as handle:
			data = json.load(handle)
		jsonschema.validate(data, schemas.vertex_set_file)
	except jsonschema.ValidationError as e:
		return RetVal(ErrBadData, f"vertex set data does not match schema: {e.message}")
	except Exception as e:
		return RetVal().wrap_exception(e)

	return make_vertex_set(data['vertices'], n)


def save_vertex_set(s: VertexSet, path: str) -> RetVal:
	'''Writes a vertex set to a JSON file'''
	try:
		with open(path, 'w', encoding='utf-8') as handle:
			json.dump(s.as_dict(), handle)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal()


def graph_hash(g: Graph) -> str:
	'''Returns the BLAKE3-256 provenance hash of the graph's canonical JSON form'''
	status = hashjson(g.as_dict())
	return status['hash'].as_string()
