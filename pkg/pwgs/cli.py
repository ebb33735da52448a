'''The pwgs command line: graph generation, spectral analysis, λ-set certification, sampling set
search, reconstruction and the theorem suite.

Reports are JSON documents of the form {"schema": 1, "manifest": {...}, "result": {...}}. The
manifest echoes everything the result depends on, so two runs with the same manifest produce the
same bytes apart from the timestamp. Failures are written to stderr as
{"schema": 1, "error": code, "info": message}.
'''

from datetime import datetime, timezone
import json
import math
import os
import sys

import click
import jsonschema
import numpy as np
from loguru import logger
from retval import RetVal, ErrFilesystemError, ErrNotFound

import pwgs
from pwgs import schemas
from pwgs.config import load_config, thread_count, validate_config
from pwgs.errorcodes import InvalidParameter, EmptySet, UnknownSubcommand, TheoremViolation, \
	SampleIndexMismatch
from pwgs.frames import frame_bounds, stability_certificate, lambda_bound_from_sampling, \
	reconstruct as reconstruct_signal
from pwgs.graph import FAMILIES, Graph, VertexSet, generate, load_graph, load_vertex_set, \
	parse_vertex_list, complement, graph_hash, is_independent
from pwgs.hash import hashfile
from pwgs.lambdacert import minimal_lambda, is_lambda_set
from pwgs.setsearch import make_search_config, run_search
from pwgs.spectral import Spectrum, compute_spectrum, laplacian_matrix, spectrum_diagnostics, \
	omega_from_quantile, load_signal_csv, save_signal_csv
from pwgs.verify import run_suite, truncation_study

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_VIOLATION = 3
EXIT_UNKNOWN_COMMAND = 64
EXIT_NO_INPUT = 66
EXIT_CANT_CREATE = 73

LOG_LEVELS = [ 'DEBUG', 'INFO', 'WARNING', 'ERROR' ]


class CommandFailure(click.ClickException):
	'''A failed command, reported as error JSON on stderr'''
	def __init__(self, code: str, info: str, exit_code: int=EXIT_VALIDATION) -> None:
		super().__init__(info)
		self.code = code
		self.info = info
		self.exit_code = exit_code

	def show(self, file=None) -> None:
		click.echo(json.dumps({ 'schema': 1, 'error': self.code, 'info': self.info }),
			file=file or sys.stderr)


def _usage_failure(e: click.UsageError) -> click.ClickException:
	'''Returns the error JSON failure for a usage error, or None for a bare invocation, which keeps
	click's help text'''
	if isinstance(e, getattr(click.exceptions, 'NoArgsIsHelpError', ())):
		return None
	return CommandFailure(InvalidParameter, e.format_message(), EXIT_VALIDATION)


class PwgsGroup(click.Group):
	'''Command group which reports unknown subcommands with their own exit code and turns usage
	errors into error JSON'''
	def make_context(self, info_name, args, parent=None, **extra):
		try:
			return super().make_context(info_name, args, parent, **extra)
		except click.UsageError as e:
			failure = _usage_failure(e)
			if failure is None:
				raise
			raise failure from e

	def invoke(self, ctx):
		try:
			return super().invoke(ctx)
		except click.UsageError as e:
			failure = _usage_failure(e)
			if failure is None:
				raise
			raise failure from e

	def resolve_command(self, ctx, args):
		if args and not args[0].startswith('-') and self.get_command(ctx, args[0]) is None:
			raise CommandFailure(UnknownSubcommand, f"unknown subcommand '{args[0]}'",
				EXIT_UNKNOWN_COMMAND)
		return super().resolve_command(ctx, args)


class Session:
	'''Effective settings plus the provenance collected while a command runs'''
	def __init__(self, config: dict) -> None:
		self.config = config
		self.inputs = []
		self.graph_hash = ''

	def add_input(self, path: str) -> None:
		status = hashfile(path)
		self.inputs.append({ 'path': path, 'hash': status['hash'] if not status.error() else '' })

	def manifest(self, command: str, parameters: dict) -> dict:
		params = dict(parameters)
		params['settings'] = self.config
		return {
			'command': command,
			'inputs': self.inputs,
			'parameters': params,
			'version': pwgs.__version__,
			'graph_hash': self.graph_hash,
			'timestamp': datetime.now(timezone.utc).isoformat(),
		}


def _check(status: RetVal, exit_code: int=EXIT_VALIDATION) -> RetVal:
	if status.error():
		raise CommandFailure(status.error(), status.info(), exit_code)
	return status


def _jsonable(value):
	'''Converts numpy values and non-finite floats into plain JSON values'''
	if isinstance(value, dict):
		return { str(k): _jsonable(v) for k, v in value.items() }
	if isinstance(value, (list, tuple)):
		return [ _jsonable(x) for x in value ]
	if isinstance(value, np.ndarray):
		return _jsonable(value.tolist())
	if isinstance(value, np.generic):
		value = value.item()
	if isinstance(value, complex):
		return [ _jsonable(value.real), _jsonable(value.imag) ]
	if isinstance(value, float) and not math.isfinite(value):
		return None
	return value


def _emit(text: str, path: str) -> None:
	if not path:
		click.echo(text)
		return
	try:
		with open(path, 'w', encoding='utf-8') as handle:
			handle.write(text)
			handle.write('\n')
	except Exception as e:
		raise CommandFailure(ErrFilesystemError, f"could not write {path}: {e}", EXIT_CANT_CREATE)


def _write_report(session: Session, command: str, parameters: dict, result, path: str) -> None:
	report = _jsonable({
		'schema': 1,
		'manifest': session.manifest(command, parameters),
		'result': result,
	})
	jsonschema.validate(report, schemas.report_envelope)
	_emit(json.dumps(report, indent=2, sort_keys=True), path)


def _write_steps(steps: list, path: str) -> None:
	if path:
		_emit('\n'.join(json.dumps(_jsonable(x), sort_keys=True) for x in steps), path)


def _require_file(path: str) -> None:
	if not os.path.isfile(path):
		raise CommandFailure(ErrNotFound, f"input file {path} does not exist", EXIT_NO_INPUT)


def _open_graph(session: Session, path: str) -> Graph:
	_require_file(path)
	g = _check(load_graph(path))['graph']
	session.add_input(path)
	session.graph_hash = graph_hash(g)
	logger.info(f"loaded graph {path}: n={g.n}, max degree {g.max_degree}")
	return g


def _vertex_set(session: Session, g: Graph, text: str, path: str) -> VertexSet:
	if path:
		_require_file(path)
		session.add_input(path)
		return _check(load_vertex_set(path, g.n))['set']
	if text is None:
		raise CommandFailure(InvalidParameter, 'a vertex set is required: use --set or --set-file')
	return _check(parse_vertex_list(text, g.n))['set']


def _spectrum(session: Session, g: Graph) -> Spectrum:
	tolerance = session.config['tolerance']
	return _check(compute_spectrum(g, session.config['solver']['dense_limit'],
		tolerance['tie_tol_factor']))['spectrum']


def _omega(spec: Spectrum, omega: float, quantile: float) -> float:
	if (omega is None) == (quantile is None):
		raise CommandFailure(InvalidParameter, 'give exactly one of --omega and --omega-quantile')
	if quantile is not None:
		return _check(omega_from_quantile(spec, quantile))['omega']
	if not math.isfinite(omega) or omega < 0:
		raise CommandFailure(InvalidParameter, f"bandwidth must be a finite nonnegative number, "
			f"got {omega}")
	return omega


def _int_list(text: str) -> list:
	try:
		return [ int(x) for x in text.split(',') if x.strip() ]
	except ValueError:
		raise CommandFailure(InvalidParameter, f"expected a comma-separated list of integers, "
			f"got '{text}'")


graph_option = click.option('-g', '--graph', 'graph_path', required=True, help='Graph JSON file')
output_option = click.option('-o', '--output', default='', help='Output file (default stdout)')
omega_option = click.option('--omega', type=float, default=None, help='Bandwidth ω')
quantile_option = click.option('--omega-quantile', type=float, default=None,
	help='Bandwidth as a quantile of the spectrum')
set_option = click.option('--set', 'set_text', default=None, help='Vertex ids, e.g. 0,1,5')
set_file_option = click.option('--set-file', default='', help='Vertex set JSON file')


@click.group(cls=PwgsGroup)
@click.option('--config', 'config_path', default='', help='TOML settings file')
@click.option('--log-level', type=click.Choice(LOG_LEVELS, case_sensitive=False),
	default='WARNING', show_default=True)
@click.option('--tie-tol-factor', type=float, default=None, help='Relative band tie tolerance')
@click.option('--rank-tol', type=float, default=None, help='Smallest A counted as sampling')
@click.option('--slack', type=float, default=None, help='Relative slack of λ-set checks')
@click.option('--certificate-slack', type=float, default=None,
	help='Relative slack of certificate checks')
@click.option('--ill-conditioned', type=float, default=None,
	help='Condition number B/A above which a frame is flagged')
@click.option('--dense-limit', type=int, default=None, help='Largest n for the dense solver')
@click.option('--threads', type=int, default=None, help='Worker threads, 0 for CPU count')
@click.pass_context
def cli(ctx, config_path, log_level, tie_tol_factor, rank_tol, slack, certificate_slack,
	ill_conditioned, dense_limit, threads):
	'''Sampling and stable reconstruction of Paley-Wiener signals on graphs.'''
	logger.remove()
	logger.add(sys.stderr, level=log_level.upper())

	if config_path:
		_require_file(config_path)
	config = _check(load_config(config_path))['config']

	overrides = [
		('tolerance', 'tie_tol_factor', tie_tol_factor),
		('tolerance', 'rank_tol', rank_tol),
		('tolerance', 'slack', slack),
		('tolerance', 'certificate_slack', certificate_slack),
		('tolerance', 'ill_conditioned', ill_conditioned),
		('solver', 'dense_limit', dense_limit),
		('verify', 'threads', threads),
	]
	for table, key, value in overrides:
		if value is not None:
			if value < 0:
				raise CommandFailure(InvalidParameter, f"--{key.replace('_', '-')} must not be "
					'negative')
			config[table][key] = value
	_check(validate_config(config))

	session = Session(config)
	if config_path:
		session.add_input(config_path)
	ctx.obj = session


@cli.command()
@click.option('--family', type=click.Choice(FAMILIES), required=True)
@click.option('--n', 'n', type=int, default=None, help='Vertex count')
@click.option('--dims', default='', help='Box side lengths, e.g. 6,6')
@click.option('--wraparound', is_flag=True, help='Wrap box sides into a torus')
@click.option('--branching', default='', help='Children per level of a radial tree, e.g. 3,2,2')
@click.option('--p', 'p', type=float, default=0.1, show_default=True,
	help='Extra edge probability of random_connected')
@click.option('--seed', type=int, default=0, show_default=True)
@output_option
def gen(family, n, dims, wraparound, branching, p, seed, output):
	'''Generate a graph from a family and write it as graph JSON.'''
	params = dict()
	if family in [ 'path', 'cycle', 'complete', 'random_connected' ]:
		if n is None:
			raise CommandFailure(InvalidParameter, f"family {family} requires --n")
		params['n'] = n
	if family == 'lattice_box':
		params['dims'] = _int_list(dims)
		params['wraparound'] = wraparound
	if family == 'radial_tree':
		params['branching'] = _int_list(branching)
	if family == 'random_connected':
		params['p'] = p
		params['seed'] = seed

	g = _check(generate(family, **params))['graph']
	logger.info(f"generated {family} graph with {g.n} vertices")
	_emit(json.dumps(g.as_dict()), output)


@cli.command()
@graph_option
@output_option
@click.pass_obj
def spectrum(session, graph_path, output):
	'''Compute the spectrum of the normalized Laplacian.'''
	g = _open_graph(session, graph_path)
	spec = _spectrum(session, g)
	result = spec.as_dict()
	result['diagnostics'] = spectrum_diagnostics(spec, laplacian_matrix(g))
	_write_report(session, 'spectrum', { 'graph': graph_path }, result, output)


@cli.command('certify-lambda')
@graph_option
@set_option
@set_file_option
@click.option('--lambda', 'lam', type=float, default=None, help='Check S against this λ')
@omega_option
@click.option('--probes', type=int, default=100, show_default=True,
	help='Random signals for the stability check')
@click.option('--seed', type=int, default=0, show_default=True)
@output_option
@click.pass_obj
def certify_lambda(session, graph_path, set_text, set_file, lam, omega, probes, seed, output):
	'''Certify the minimal Poincaré constant of a vertex set S.

	With --omega the complement V∖S is also certified as a stable sampling set.'''
	g = _open_graph(session, graph_path)
	s = _vertex_set(session, g, set_text, set_file)
	params = { 'graph': graph_path, 'set': s.as_list(), 'lambda': lam, 'omega': omega,
		'probes': probes, 'seed': seed }

	status = minimal_lambda(g, s)
	if status.error() == EmptySet:
		_write_report(session, 'certify-lambda', params,
			{ 'subset': [], 'vacuous': True, 'graph_hash': session.graph_hash }, output)
		return
	result = _check(status)['certificate'].flatten(session.graph_hash)
	result['independent'] = is_independent(g, s)

	slack = session.config['tolerance']['slack']
	if lam is not None:
		result['is_lambda_set'] = _check(is_lambda_set(g, s, lam, slack))['is_lambda_set']

	violation = False
	if omega is not None:
		spec = _spectrum(session, g)
		status = _check(stability_certificate(g, spec, omega, s, probes, seed,
			session.config['tolerance']['rank_tol'],
			session.config['tolerance']['certificate_slack']))
		result['stability'] = status['certificate'].flatten(session.graph_hash)
		violation = not status['certificate'].verified

	_write_report(session, 'certify-lambda', params, result, output)
	if violation:
		raise CommandFailure(TheoremViolation, 'stability certificate failed', EXIT_VIOLATION)


@cli.command()
@graph_option
@omega_option
@quantile_option
@set_option
@set_file_option
@output_option
@click.pass_obj
def frame(session, graph_path, omega, omega_quantile, set_text, set_file, output):
	'''Report the frame bounds of a sampling set W.

	When ω > 0 and W is a proper sampling set, the complement V∖W is also certified as a λ-set.'''
	g = _open_graph(session, graph_path)
	spec = _spectrum(session, g)
	omega = _omega(spec, omega, omega_quantile)
	w = _vertex_set(session, g, set_text, set_file)
	tolerance = session.config['tolerance']

	report = _check(frame_bounds(spec, omega, w, tolerance['rank_tol'],
		tolerance['ill_conditioned']))['report']
	result = report.flatten(session.graph_hash)

	violation = False
	if omega > 0 and report.is_sampling_set() and len(w) < g.n:
		status = _check(lambda_bound_from_sampling(g, spec, omega, w, tolerance['rank_tol'],
			tolerance['certificate_slack']))
		result['complement'] = {
			'lambda_bound': status['lambda_bound'],
			'verified': status['verified'],
			'certificate': status['certificate'].flatten(session.graph_hash),
			'gap': status['gap'],
		}
		violation = not status['verified']

	params = { 'graph': graph_path, 'omega': omega, 'omega_quantile': omega_quantile,
		'set': w.as_list() }
	_write_report(session, 'frame', params, result, output)
	if violation:
		raise CommandFailure(TheoremViolation, 'complement λ bound failed', EXIT_VIOLATION)


@cli.command()
@graph_option
@omega_option
@quantile_option
@set_option
@set_file_option
@click.option('--samples', 'samples_path', required=True,
	help='Sample CSV with rows vertex_id,real,imag for every vertex of W')
@output_option
@click.pass_obj
def reconstruct(session, graph_path, omega, omega_quantile, set_text, set_file, samples_path,
	output):
	'''Reconstruct a signal of PW_ω from its samples on W and write it as CSV.'''
	g = _open_graph(session, graph_path)
	spec = _spectrum(session, g)
	omega = _omega(spec, omega, omega_quantile)
	w = _vertex_set(session, g, set_text, set_file)

	_require_file(samples_path)
	status = _check(load_signal_csv(samples_path, g.n, w))
	if status['vertices'] != w:
		raise CommandFailure(SampleIndexMismatch, 'the sample file must have one row per vertex '
			'of the sampling set')
	samples = status['signal'][w.as_list()]
	if not np.any(samples.imag):
		samples = samples.real

	status = _check(reconstruct_signal(spec, omega, w, samples,
		session.config['tolerance']['rank_tol']))
	logger.info(f"reconstructed from {len(w)} samples, A={status['report'].lower_bound!r}")

	if output:
		_check(save_signal_csv(output, status['signal']), EXIT_CANT_CREATE)
	else:
		signal = np.asarray(status['signal'], dtype=complex)
		for v, value in enumerate(signal):
			click.echo(f"{v},{value.real!r},{value.imag!r}")


def _search_config(omega: float, target: str, lambda_cap: float, seed: int, max_iterations: int,
	config: dict):
	return _check(make_search_config(omega, target, lambda_cap, seed,
		max_iterations or config['search']['max_iterations'],
		config['search']['margin']))['config']


@cli.command('search-lambda')
@graph_option
@omega_option
@quantile_option
@click.option('--lambda-cap', type=float, default=None, help='Largest λ accepted (default '
	'(1 − margin)/ω)')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--max-iterations', type=int, default=None)
@click.option('--steps', 'steps_path', default='', help='JSON-lines log of considered candidates')
@output_option
@click.pass_obj
def search_lambda(session, graph_path, omega, omega_quantile, lambda_cap, seed, max_iterations,
	steps_path, output):
	'''Grow a large λ-set greedily; its complement is a stable sampling set.'''
	g = _open_graph(session, graph_path)
	spec = _spectrum(session, g)
	omega = _omega(spec, omega, omega_quantile)
	cfg = _search_config(omega, 'maximize_removed', lambda_cap, seed, max_iterations,
		session.config)

	status = _check(run_search(g, spec, cfg, threads=thread_count(session.config)))
	cert = status['certificate']
	_write_steps(status['steps'], steps_path)

	w = complement(cert.subset, g.n)
	report = _check(frame_bounds(spec, omega, w, session.config['tolerance']['rank_tol']))['report']
	result = {
		'certificate': cert.flatten(session.graph_hash),
		'sampling_set': w.as_list(),
		'frame_report': report.flatten(session.graph_hash),
		'search': cfg.flatten(),
	}
	_write_report(session, 'search-lambda', { 'graph': graph_path, 'omega': omega,
		'omega_quantile': omega_quantile, 'search': cfg.flatten() }, result, output)


@cli.command('prune-samples')
@graph_option
@omega_option
@quantile_option
@click.option('--a-min', type=float, default=None, help='Smallest lower frame bound to keep '
	'(default: the bound guaranteed by the λ cap)')
@click.option('--lambda-cap', type=float, default=None)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--probes', type=int, default=0, show_default=True,
	help='Random signals used to check the frame inequalities of the result')
@click.option('--steps', 'steps_path', default='', help='JSON-lines log of removals')
@output_option
@click.pass_obj
def prune_samples(session, graph_path, omega, omega_quantile, a_min, lambda_cap, seed, probes,
	steps_path, output):
	'''Shrink W = V while the lower frame bound stays at least a_min.'''
	g = _open_graph(session, graph_path)
	spec = _spectrum(session, g)
	omega = _omega(spec, omega, omega_quantile)
	cfg = _search_config(omega, 'minimize_samples', lambda_cap, seed, None, session.config)

	status = _check(run_search(g, spec, cfg, a_min, probes=probes))
	_write_steps(status['steps'], steps_path)

	result = {
		'sampling_set': status['sampling_set'].as_list(),
		'frame_report': status['report'].flatten(session.graph_hash),
		'probe_violations': status['probe_violations'],
		'search': cfg.flatten(),
	}
	_write_report(session, 'prune-samples', { 'graph': graph_path, 'omega': omega,
		'omega_quantile': omega_quantile, 'a_min': a_min, 'probes': probes,
		'search': cfg.flatten() }, result, output)
	if status['probe_violations']:
		raise CommandFailure(TheoremViolation, f"{status['probe_violations']} probes broke the "
			'frame inequalities', EXIT_VIOLATION)


@cli.command()
@graph_option
@omega_option
@quantile_option
@click.option('--seeds', type=int, default=None, help='Seeded trials per check')
@output_option
@click.pass_obj
def verify(session, graph_path, omega, omega_quantile, seeds, output):
	'''Run the full theorem suite on a graph. Exits with 3 if any check fails.'''
	g = _open_graph(session, graph_path)
	spec = _spectrum(session, g)
	omega = _omega(spec, omega, omega_quantile)
	if seeds is not None:
		session.config['verify']['seeds'] = seeds

	report = _check(run_suite(g, spec, omega, session.config['verify']['seeds'],
		session.config))['report']
	_write_report(session, 'verify', { 'graph': graph_path, 'omega': omega,
		'omega_quantile': omega_quantile }, report.flatten(session.graph_hash), output)

	if not report.ok():
		raise CommandFailure(TheoremViolation, f"failed checks: {', '.join(report.failed())}",
			EXIT_VIOLATION)


@cli.command()
@click.option('--sizes', default='6,10,14', show_default=True, help='Box side lengths m')
@click.option('--omega', type=float, default=1.0, show_default=True)
@click.option('--csv', 'csv_path', default='', help='Also write the rows as CSV')
@output_option
@click.pass_obj
def study(session, sizes, omega, csv_path, output):
	'''Follow stable sampling on growing m×m boxes truncating ℤ².'''
	status = _check(truncation_study(_int_list(sizes), omega, session.config))
	rows = status['rows']

	if csv_path:
		columns = [ 'm', 'n', 'pw_dim', 'omega_max', 'lambda_min', 'guarantee_lemma', 'lemma_strict',
			'guarantee_min', 'min_strict', 'lower_bound' ]
		table = np.array([ [ np.nan if row[x] is None else row[x] for x in columns ]
			for row in rows ], dtype=float)
		try:
			np.savetxt(csv_path, table, delimiter=',', fmt='%.17g', header=','.join(columns),
				comments='')
		except Exception as e:
			raise CommandFailure(ErrFilesystemError, f"could not write {csv_path}: {e}",
				EXIT_CANT_CREATE)

	result = {
		'rows': rows,
		'pw_dim_increasing': status['pw_dim_increasing'],
		'holds': status['holds'],
	}
	_write_report(session, 'study', { 'sizes': _int_list(sizes), 'omega': omega }, result,
		output)
	if not status['holds']:
		raise CommandFailure(TheoremViolation, 'a truncation broke its stability guarantee',
			EXIT_VIOLATION)


def main(argv: list=None) -> int:
	'''Runs the command line and returns its exit code'''
	try:
		cli.main(args=argv, prog_name='pwgs', standalone_mode=False)
	except click.ClickException as e:
		e.show()
		return e.exit_code
	except click.Abort:
		return 1
	return EXIT_OK
