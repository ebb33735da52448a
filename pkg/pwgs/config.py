'''This module handles the tolerance and limit settings shared by the library and the CLI.

Settings are kept as a dictionary of tables, the same layout as the optional TOML file they can be
loaded from. Any value not present in the file gets its documented default.
'''

import os

import toml
from retval import RetVal, ErrBadData, ErrNotFound

THREADS_ENV = 'PWGS_THREADS'


def default_config() -> dict:
	'''Returns a settings dictionary containing only default values'''
	return _apply_defaults(dict())


def load_config(path: str='') -> RetVal:
	'''Loads settings from a TOML file, filling in defaults for anything missing.

	Parameters:
	  * path: path to a TOML file. If empty, only defaults are used.

	Returns:
	  * config: (dict) the effective settings
	'''
	config = dict()
	if path:
		if not os.path.exists(path):
			return RetVal(ErrNotFound, f"config file {path} does not exist")
		try:
			config = toml.load(path)
		except Exception as e:
			return RetVal().wrap_exception(e)

	config = _apply_defaults(config)

	status = validate_config(config)
	if status.error():
		return status

	env_threads = os.environ.get(THREADS_ENV, '')
	if env_threads:
		try:
			config['verify']['threads'] = max(0, int(env_threads))
		except ValueError:
			return RetVal(ErrBadData, f"{THREADS_ENV} must be an integer, not '{env_threads}'")

	return RetVal().set_value('config', config)


def thread_count(config: dict) -> int:
	'''Returns the number of worker threads to use for fanned-out trials'''
	threads = config['verify']['threads']
	if threads <= 0:
		threads = os.cpu_count() or 1
	return threads


def _apply_defaults(config: dict) -> dict:
	config.setdefault('tolerance', dict())
	config['tolerance'].setdefault('tie_tol_factor', 1e-9)
	config['tolerance'].setdefault('rank_tol', 1e-10)
	config['tolerance'].setdefault('slack', 1e-9)
	config['tolerance'].setdefault('certificate_slack', 1e-6)
	config['tolerance'].setdefault('ill_conditioned', 1e8)

	config.setdefault('solver', dict())
	config['solver'].setdefault('dense_limit', 5000)

	config.setdefault('verify', dict())
	config['verify'].setdefault('seeds', 100)
	config['verify'].setdefault('threads', 0)

	config.setdefault('search', dict())
	config['search'].setdefault('margin', 1e-3)
	config['search'].setdefault('max_iterations', 10_000)

	return config


def validate_config(config: dict) -> RetVal:
	'''Checks the ranges of every setting, returning ErrBadData naming the first bad one'''
	for key in ['tie_tol_factor', 'rank_tol', 'slack', 'certificate_slack']:
		value = config['tolerance'][key]
		if not isinstance(value, (int, float)) or value < 0:
			return RetVal(ErrBadData, f"tolerance.{key} must be a nonnegative number")

	if config['tolerance']['ill_conditioned'] <= 1:
		return RetVal(ErrBadData, 'tolerance.ill_conditioned must be greater than 1')

	if not isinstance(config['solver']['dense_limit'], int) or config['solver']['dense_limit'] < 1:
		return RetVal(ErrBadData, 'solver.dense_limit must be a positive integer')

	if config['verify']['seeds'] < 1:
		return RetVal(ErrBadData, 'verify.seeds must be at least 1')

	margin = config['search']['margin']
	if not 0 < margin < 1:
		return RetVal(ErrBadData, 'search.margin must be between 0 and 1')

	if config['search']['max_iterations'] < 1:
		return RetVal(ErrBadData, 'search.max_iterations must be at least 1')

	return RetVal()
