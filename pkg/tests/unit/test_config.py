import inspect
import os
import shutil
import time

import pwgs.config as config

def funcname() -> str: 
	frames = inspect.getouterframes(inspect.currentframe())
	return frames[1].function


def setup_test(name):
	'''Creates a new scratch folder for a test'''
	test_folder = os.path.join(os.path.dirname(os.path.realpath(__file__)),'testfiles')
	if not os.path.exists(test_folder):
		os.mkdir(test_folder)

	scratch_folder = os.path.join(test_folder, name)
	while os.path.exists(scratch_folder):
		try:
			shutil.rmtree(scratch_folder)
		except:
			print("Waiting a second for test folder to unlock")
			time.sleep(1.0)
	os.mkdir(scratch_folder)
	return scratch_folder


def test_defaults():
	'''Tests the default settings'''
	settings = config.default_config()
	assert settings['tolerance']['tie_tol_factor'] == 1e-9, f"{funcname()}: bad tie_tol_factor"
	assert settings['tolerance']['rank_tol'] == 1e-10, f"{funcname()}: bad rank_tol"
	assert settings['tolerance']['slack'] == 1e-9, f"{funcname()}: bad slack"
	assert settings['tolerance']['certificate_slack'] == 1e-6, \
		f"{funcname()}: bad certificate_slack"
	assert settings['solver']['dense_limit'] == 5000, f"{funcname()}: bad dense_limit"
	assert settings['verify']['seeds'] == 100, f"{funcname()}: bad seeds"
	assert settings['search']['margin'] == 1e-3, f"{funcname()}: bad margin"


def test_load_config(monkeypatch):
	'''Tests loading a partial TOML file and the thread override'''
	monkeypatch.delenv(config.THREADS_ENV, raising=False)
	test_folder = setup_test('config_load')
	path = os.path.join(test_folder, 'pwgs.toml')
	with open(path, 'w', encoding='utf-8') as handle:
		handle.write('[tolerance]\nrank_tol = 1e-12\n\n[verify]\nthreads = 3\n')

	status = config.load_config(path)
	assert not status.error(), f"{funcname()}: load_config failed: {status.info()}"
	settings = status['config']
	assert settings['tolerance']['rank_tol'] == 1e-12, f"{funcname()}: file value ignored"
	assert settings['tolerance']['slack'] == 1e-9, f"{funcname()}: default not filled in"
	assert config.thread_count(settings) == 3, f"{funcname()}: thread count ignored"

	monkeypatch.setenv(config.THREADS_ENV, '2')
	status = config.load_config(path)
	assert status['config']['verify']['threads'] == 2, \
		f"{funcname()}: {config.THREADS_ENV} did not override the file"

	monkeypatch.setenv(config.THREADS_ENV, 'many')
	assert config.load_config(path).error(), f"{funcname()}: bad thread count accepted"


def test_load_config_errors():
	'''Tests rejection of missing files and bad values'''
	test_folder = setup_test('config_errors')
	assert config.load_config(os.path.join(test_folder, 'missing.toml')).error(), \
		f"{funcname()}: missing file accepted"

	path = os.path.join(test_folder, 'bad.toml')
	for text in [ '[search]\nmargin = 2.0\n', '[tolerance]\nrank_tol = -1.0\n',
			'[solver]\ndense_limit = 0\n', 'not toml at all = = =\n' ]:
		with open(path, 'w', encoding='utf-8') as handle:
			handle.write(text)
		assert config.load_config(path).error(), f"{funcname()}: accepted bad file: {text}"


if __name__ == '__main__':
	test_defaults()
	test_load_config_errors()
