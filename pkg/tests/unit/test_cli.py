import inspect
import json
import math
import os
import shutil
import time

from click.testing import CliRunner
import numpy as np
from retval import ErrBadData

from pwgs.cli import cli, main
from pwgs.errorcodes import InvalidParameter, UnknownSubcommand
from pwgs.graph import VertexSet, load_graph, graph_hash
from pwgs.spectral import compute_spectrum, random_bandlimited, load_signal_csv, save_signal_csv

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


def _runner():
	# Older click versions need stderr kept apart explicitly
	try:
		return CliRunner(mix_stderr=False)
	except TypeError:
		return CliRunner()


def _make_p3(runner, folder) -> str:
	path = os.path.join(folder, 'p3.json')
	result = runner.invoke(cli, ['gen', '--family', 'path', '--n', '3', '-o', path])
	assert result.exit_code == 0, f"gen failed: {result.output}"
	return path


def test_gen():
	'''Tests graph generation from the command line'''
	runner = _runner()
	folder = setup_test('cli_gen')
	path = _make_p3(runner, folder)
	status = load_graph(path)
	assert not status.error(), f"{funcname()}: generated file is not a valid graph"
	assert status['graph'].edges() == [(0, 1), (1, 2)], f"{funcname()}: wrong graph"

	result = runner.invoke(cli, ['gen', '--family', 'lattice_box', '--dims', '3,4'])
	assert result.exit_code == 0, f"{funcname()}: lattice_box failed"
	assert json.loads(result.stdout)['n'] == 12, f"{funcname()}: wrong box size"

	result = runner.invoke(cli, ['gen', '--family', 'cycle', '--n', '2'])
	assert result.exit_code == 2, f"{funcname()}: invalid cycle not rejected"
	error = json.loads(result.stderr)
	assert error['schema'] == 1 and error['error'] == InvalidParameter, \
		f"{funcname()}: bad error JSON {error}"


def test_frame():
	'''Tests the frame report for the P3 worked example'''
	runner = _runner()
	folder = setup_test('cli_frame')
	path = _make_p3(runner, folder)
	out = os.path.join(folder, 'frame.json')

	result = runner.invoke(cli, ['frame', '-g', path, '--omega', '1.0', '--set', '0,1', '-o', out])
	assert result.exit_code == 0, f"{funcname()}: frame failed: {result.output}"
	with open(out, 'r', encoding='utf-8') as handle:
		report = json.load(handle)

	assert report['schema'] == 1, f"{funcname()}: schema field missing"
	assert report['manifest']['command'] == 'frame', f"{funcname()}: wrong command in manifest"
	assert report['manifest']['graph_hash'] == graph_hash(load_graph(path)['graph']), \
		f"{funcname()}: wrong graph hash in manifest"
	assert report['manifest']['inputs'][0]['hash'].startswith('BLAKE3-256:'), \
		f"{funcname()}: input not hashed"
	assert abs(report['result']['lower_bound'] - 0.25) <= 1e-12, f"{funcname()}: wrong A"
	assert abs(report['result']['upper_bound'] - 1.0) <= 1e-12, f"{funcname()}: wrong B"
	assert report['result']['complement']['verified'], f"{funcname()}: λ bound not verified"


def test_reports_reproducible():
	'''Tests that reports only differ in their timestamp'''
	runner = _runner()
	folder = setup_test('cli_reproducible')
	path = _make_p3(runner, folder)

	outputs = []
	for _ in range(2):
		result = runner.invoke(cli, ['certify-lambda', '-g', path, '--set', '0', '--omega', '1.0'])
		assert result.exit_code == 0, f"{funcname()}: certify-lambda failed: {result.output}"
		report = json.loads(result.stdout)
		del report['manifest']['timestamp']
		outputs.append(json.dumps(report, sort_keys=True))

	assert outputs[0] == outputs[1], f"{funcname()}: reports differ"
	report = json.loads(outputs[0])
	assert abs(report['result']['lambda_min'] - math.sqrt(2.0 / 3.0)) <= 1e-10, \
		f"{funcname()}: wrong λ_min"
	assert report['result']['stability']['verified'], f"{funcname()}: stability not verified"

	result = runner.invoke(cli, ['certify-lambda', '-g', path, '--set', ''])
	assert result.exit_code == 0 and json.loads(result.stdout)['result']['vacuous'], \
		f"{funcname()}: empty set not reported as vacuous"


def test_reconstruct():
	'''Tests reconstruction from a sample file'''
	runner = _runner()
	folder = setup_test('cli_reconstruct')
	path = os.path.join(folder, 'c8.json')
	runner.invoke(cli, ['gen', '--family', 'cycle', '--n', '8', '-o', path])

	g = load_graph(path)['graph']
	spec = compute_spectrum(g)['spectrum']
	f = random_bandlimited(spec, 0.5, 12)['signal']
	samples = os.path.join(folder, 'samples.csv')
	w = VertexSet([0, 2, 3, 5, 6])
	save_signal_csv(samples, f, w)

	out = os.path.join(folder, 'signal.csv')
	result = runner.invoke(cli, ['reconstruct', '-g', path, '--omega', '0.5', '--set', '0,2,3,5,6',
		'--samples', samples, '-o', out])
	assert result.exit_code == 0, f"{funcname()}: reconstruct failed: {result.output}"
	recovered = load_signal_csv(out, g.n)['signal']
	assert np.linalg.norm(recovered - f) <= 1e-8 * np.linalg.norm(f), \
		f"{funcname()}: reconstruction error"

	result = runner.invoke(cli, ['reconstruct', '-g', path, '--omega', '0.5', '--set', '0,2',
		'--samples', samples])
	assert result.exit_code == 2, f"{funcname()}: samples outside W accepted"


def test_search_commands():
	'''Tests search-lambda and prune-samples with their step logs'''
	runner = _runner()
	folder = setup_test('cli_search')
	path = os.path.join(folder, 'c4.json')
	runner.invoke(cli, ['gen', '--family', 'cycle', '--n', '4', '-o', path])
	steps = os.path.join(folder, 'steps.jsonl')

	result = runner.invoke(cli, ['search-lambda', '-g', path, '--omega', '0.9', '--steps', steps])
	assert result.exit_code == 0, f"{funcname()}: search-lambda failed: {result.output}"
	report = json.loads(result.stdout)
	assert report['result']['certificate']['subset'] == [0, 2], f"{funcname()}: wrong λ-set"
	assert report['result']['sampling_set'] == [1, 3], f"{funcname()}: wrong sampling set"
	with open(steps, 'r', encoding='utf-8') as handle:
		lines = [ json.loads(x) for x in handle if x.strip() ]
	assert lines and lines[0]['accepted'], f"{funcname()}: step log missing the seed"

	result = runner.invoke(cli, ['prune-samples', '-g', path, '--omega', '1.0', '--a-min', '0.2',
		'--probes', '20'])
	assert result.exit_code == 0, f"{funcname()}: prune-samples failed: {result.output}"
	report = json.loads(result.stdout)
	assert report['result']['frame_report']['lower_bound'] >= 0.2 - 1e-9, \
		f"{funcname()}: pruned set below a_min"

	result = runner.invoke(cli, ['prune-samples', '-g', path, '--omega', '1.0', '--a-min', '2'])
	assert result.exit_code == 2, f"{funcname()}: infeasible target accepted"


def test_verify_command():
	'''Tests the verify subcommand on P3'''
	runner = _runner()
	folder = setup_test('cli_verify')
	path = _make_p3(runner, folder)
	result = runner.invoke(cli, ['--threads', '2', 'verify', '-g', path, '--omega', '1.0',
		'--seeds', '50'])
	assert result.exit_code == 0, f"{funcname()}: verify failed: {result.output}"
	report = json.loads(result.stdout)
	assert report['result']['ok'], f"{funcname()}: suite reported failures"
	assert report['manifest']['parameters']['settings']['verify']['seeds'] == 50, \
		f"{funcname()}: seeds not echoed"

	result = runner.invoke(cli, ['verify', '-g', path, '--omega-quantile', '0.5', '--seeds', '5'])
	assert result.exit_code == 0, f"{funcname()}: verify with a quantile failed"
	result = runner.invoke(cli, ['verify', '-g', path, '--seeds', '5'])
	assert result.exit_code == 2, f"{funcname()}: missing bandwidth accepted"


def test_study():
	'''Tests the truncation study command and its CSV'''
	runner = _runner()
	folder = setup_test('cli_study')
	csv_path = os.path.join(folder, 'study.csv')
	result = runner.invoke(cli, ['study', '--sizes', '4,6', '--omega', '0.5', '--csv', csv_path])
	assert result.exit_code == 0, f"{funcname()}: study failed: {result.output}"
	assert len(json.loads(result.stdout)['result']['rows']) == 2, f"{funcname()}: wrong row count"
	table = np.loadtxt(csv_path, delimiter=',', skiprows=1, ndmin=2)
	assert table.shape[0] == 2, f"{funcname()}: wrong CSV row count"


def test_exit_codes():
	'''Tests exit codes for unknown subcommands, missing files and config files'''
	folder = setup_test('cli_exit_codes')
	assert main(['bogus']) == 64, f"{funcname()}: unknown subcommand not mapped to 64"
	assert main(['spectrum', '-g', os.path.join(folder, 'missing.json')]) == 66, \
		f"{funcname()}: missing input not mapped to 66"

	runner = _runner()
	result = runner.invoke(cli, ['bogus'])
	assert result.exit_code == 64, f"{funcname()}: CliRunner exit code for bogus"
	assert json.loads(result.stderr)['error'] == UnknownSubcommand, \
		f"{funcname()}: wrong error code"

	path = _make_p3(runner, folder)
	out = os.path.join(folder, 'no', 'such', 'dir', 'out.json')
	assert main(['spectrum', '-g', path, '-o', out]) == 73, \
		f"{funcname()}: unwritable output not mapped to 73"

	config = os.path.join(folder, 'pwgs.toml')
	with open(config, 'w', encoding='utf-8') as handle:
		handle.write('[tolerance]\nrank_tol = 1e-12\n')
	result = runner.invoke(cli, ['--config', config, 'spectrum', '-g', path])
	assert result.exit_code == 0, f"{funcname()}: config file rejected: {result.output}"
	report = json.loads(result.stdout)
	assert report['manifest']['parameters']['settings']['tolerance']['rank_tol'] == 1e-12, \
		f"{funcname()}: config file not applied"
	assert len(report['result']['eigenvalues']) == 3, f"{funcname()}: wrong spectrum"

	result = runner.invoke(cli, ['frame', '-g', path, '--omega', 'abc', '--set', '0'])
	assert result.exit_code == 2, f"{funcname()}: bad --omega not mapped to 2"
	error = json.loads(result.stderr)
	assert error['schema'] == 1 and error['error'] == InvalidParameter, \
		f"{funcname()}: bad --omega gave {error}"
	assert '--omega' in error['info'], f"{funcname()}: error does not name the option"

	result = runner.invoke(cli, ['frame', '--omega', '1.0', '--set', '0'])
	assert result.exit_code == 2, f"{funcname()}: missing -g not mapped to 2"
	assert json.loads(result.stderr)['error'] == InvalidParameter, \
		f"{funcname()}: missing -g did not give error JSON"

	assert main(['frame', '--omega', 'abc', '-g', path, '--set', '0']) == 2, \
		f"{funcname()}: main() exit code for a bad option value"


def test_setting_overrides():
	'''Tests that global setting flags are range checked and echoed'''
	runner = _runner()
	folder = setup_test('cli_overrides')
	path = _make_p3(runner, folder)

	result = runner.invoke(cli, ['--dense-limit', '0', 'spectrum', '-g', path])
	assert result.exit_code == 2, f"{funcname()}: dense limit 0 accepted"
	assert json.loads(result.stderr)['error'] == ErrBadData, f"{funcname()}: wrong error code"

	result = runner.invoke(cli, ['--ill-conditioned', '0.5', 'spectrum', '-g', path])
	assert result.exit_code == 2, f"{funcname()}: condition threshold below 1 accepted"

	result = runner.invoke(cli, ['--ill-conditioned', '3', 'frame', '-g', path, '--omega', '1.0',
		'--set', '0,1'])
	assert result.exit_code == 0, f"{funcname()}: frame failed: {result.output}"
	report = json.loads(result.stdout)
	assert report['manifest']['parameters']['settings']['tolerance']['ill_conditioned'] == 3, \
		f"{funcname()}: threshold not echoed"
	assert report['result']['ill_conditioned'], f"{funcname()}: B/A = 4 not flagged above 3"


if __name__ == '__main__':
	test_gen()
	test_frame()
	test_reports_reproducible()
	test_reconstruct()
	test_search_commands()
	test_verify_command()
	test_study()
	test_exit_codes()
	test_setting_overrides()
