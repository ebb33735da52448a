'''This module contains the hash functions used for report provenance'''

import base64
import hashlib
import json

import blake3
from pycryptostring import CryptoString
from retval import RetVal, ErrBadValue

DEFAULT_ALGORITHM = 'BLAKE3-256'


def _make_hasher(algorithm: str):
	if algorithm == 'BLAKE3-256':
		return blake3.blake3() # pylint: disable=c-extension-no-member
	if algorithm == 'BLAKE2B-256':
		return hashlib.blake2b(digest_size=32)
	if algorithm == 'SHA-256':
		return hashlib.sha256()
	return None


def hashbuffer(data: bytes, algorithm: str=DEFAULT_ALGORITHM) -> RetVal:
	'''Calculates a hash value for the memory buffer passed to it

	Parameters:
	  * data: an array of bytes
	  * algorithm: the hash algorithm to be used. This can be one of the following:
			- BLAKE3-256 (default)
			- BLAKE2B-256
			- SHA-256

	Returns:
	  * hash: (CryptoString) the computed hash of the buffer
	'''
	if not data:
		return RetVal(ErrBadValue, 'empty buffer')

	hasher = _make_hasher(algorithm)
	if hasher is None:
		return RetVal(ErrBadValue, f"unsupported algorithm {algorithm}")

	hasher.update(data)
	return RetVal().set_value('hash',
		CryptoString(f"{algorithm}:{base64.b85encode(hasher.digest()).decode()}"))


def hashjson(data, algorithm: str=DEFAULT_ALGORITHM) -> RetVal:
	'''Hashes the canonical JSON form of data: sorted keys, no whitespace, UTF-8. Two documents
	that differ only in key order or spacing hash the same.'''
	try:
		canonical = json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return hashbuffer(canonical.encode('utf-8'), algorithm)


def hashfile(path: str, algorithm: str=DEFAULT_ALGORITHM) -> RetVal:
	'''Returns a RetVal containing the hash of the passed file in the 'hash' field as a
	CryptoString-format string.'''
	if not path:
		return RetVal(ErrBadValue, 'bad path')

	hasher = _make_hasher(algorithm)
	if hasher is None:
		return RetVal(ErrBadValue, f"unsupported algorithm {algorithm}")

	try:
		with open(path, 'rb') as handle:
			filedata = handle.read(8192)
			while filedata:
				hasher.update(filedata)
				filedata = handle.read(8192)
	except Exception as e:
		return RetVal().wrap_exception(e)

	return RetVal().set_value('hash', f"{algorithm}:{base64.b85encode(hasher.digest()).decode()}")
