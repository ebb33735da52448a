import inspect
import os
import shutil
import time

from pwgs.hash import hashbuffer, hashfile, hashjson

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


def test_hashbuffer():
	'''Tests hashbuffer() with each supported algorithm'''
	for algorithm in [ 'BLAKE3-256', 'BLAKE2B-256', 'SHA-256' ]:
		status = hashbuffer(b'{"n":3}', algorithm)
		assert not status.error(), f"{funcname()}: {algorithm} failed"
		assert status['hash'].prefix == algorithm, f"{funcname()}: wrong prefix for {algorithm}"

	assert hashbuffer(b'').error(), f"{funcname()}: empty buffer accepted"
	assert hashbuffer(b'abc', 'MD5').error(), f"{funcname()}: unsupported algorithm accepted"


def test_hashfile():
	'''Tests that hashfile() agrees with hashbuffer()'''
	test_folder = setup_test('hash_file')
	path = os.path.join(test_folder, 'data.bin')
	data = b'0,1\n1,2\n' * 5000
	with open(path, 'wb') as handle:
		handle.write(data)

	status = hashfile(path)
	assert not status.error(), f"{funcname()}: hashfile failed: {status.info()}"
	assert status['hash'] == hashbuffer(data)['hash'].as_string(), \
		f"{funcname()}: file and buffer hashes differ"
	assert hashfile(os.path.join(test_folder, 'missing.bin')).error(), \
		f"{funcname()}: missing file hashed"


def test_hashjson():
	'''Tests that key order and spacing do not change the canonical hash'''
	first = hashjson({ 'n': 3, 'edges': [[0, 1], [1, 2]] })
	second = hashjson({ 'edges': [[0, 1], [1, 2]], 'n': 3 })
	assert not first.error(), f"{funcname()}: hashjson failed: {first.info()}"
	assert first['hash'].as_string() == second['hash'].as_string(), \
		f"{funcname()}: key order changed the hash"
	assert first['hash'].as_string() == hashbuffer(b'{"edges":[[0,1],[1,2]],"n":3}')['hash'].as_string(), \
		f"{funcname()}: hash is not over the compact form"
	assert hashjson({ 'bad': object() }).error(), f"{funcname()}: unserializable data hashed"


if __name__ == '__main__':
	test_hashbuffer()
	test_hashfile()
	test_hashjson()
