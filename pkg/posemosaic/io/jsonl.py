import json
import logging
import os
import tempfile
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar

from posemosaic.core.errors import ParseError, SchemaMismatch

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

T = TypeVar('T')
# (line number, record index, record)
Located = Tuple[int, int, Dict[str, Any]]


def atomic_write_text(path: str, text: str):
    """
    Writes a text file atomically: the content goes to a temporary file of the same directory, which then
    replaces the target. Readers never observe a partially written file.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.' + os.path.basename(path), suffix='.tmp', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def dumps(data: Dict[str, Any]) -> str:
    """
    Serializes one record on a single line. Floats are written with their shortest exact representation.
    """
    return json.dumps(data, separators=(',', ':'), allow_nan=False)


class RecordWriter:
    """
    Collects the records of a line-delimited file and writes them atomically.
    The first line of the file is a header object naming the schema and its version, each following line is one
    record object.

    Examples
    --------
    Writing a file with a custom header field::

        writer = RecordWriter('posemosaic.poses', {'count': 2})
        writer.add_record({'id': 'a', 'joints3d_mm': [[0, 0, 0]]})
        writer.add_record({'id': 'b', 'joints3d_mm': [[1, 0, 0]]})
        writer.write('mocap/poses')
    """

    def __init__(self, schema: str, header: Optional[Dict[str, Any]] = None, version: int = FORMAT_VERSION):
        """
        :param schema: the schema name
        :param header: extra header fields
        :param version: the schema version
        """
        self.header = {'schema': schema, 'version': version}
        self.header.update(header or dict())
        self.records: List[Dict[str, Any]] = []

    def add_record(self, record: Dict[str, Any]):
        self.records.append(record)

    def text(self) -> str:
        return ''.join(dumps(line) + '\n' for line in [self.header] + self.records)

    def write(self, file_path: str):
        atomic_write_text(file_path, self.text())
        logger.debug('Wrote %d %s records to %s.', len(self.records), self.header['schema'], file_path)


def _parse_line(text: str, path: str, line: int, record: Optional[int]) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f'invalid record: {e.msg}', path, line, record) from e
    if not isinstance(data, dict):
        raise ParseError('a record must be an object', path, line, record)
    return data


def read_records(file_path: str, schema: str,
                 versions: Sequence[int] = (FORMAT_VERSION,)) -> Tuple[Dict[str, Any], Iterator[Located]]:
    """
    Reads a line-delimited file written by :class:`RecordWriter`.

    :param file_path: the path of the file
    :param schema: the expected schema name
    :param versions: the supported schema versions
    :return: the header and an iterator over the (line number, record index, record) triples
    :raises SchemaMismatch: if the header names another schema or an unsupported version
    :raises ParseError: if a line is not a well-formed object, with its line and record index
    """
    with open(file_path, encoding='utf-8') as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError('missing header', file_path, 1)
    header = _parse_line(lines[0], file_path, 1, None)
    if header.get('schema') != schema:
        raise SchemaMismatch(f'{file_path}: expected schema {schema}, found {header.get("schema")}.')
    if header.get('version') not in versions:
        raise SchemaMismatch(f'{file_path}: unsupported {schema} version {header.get("version")}.')

    def records() -> Iterator[Located]:
        index = 0
        for number, text in enumerate(lines[1:], start=2):
            if not text.strip():
                continue
            yield number, index, _parse_line(text, file_path, number, index)
            index += 1

    return header, records()


def read_header(file_path: str) -> Dict[str, Any]:
    """
    Reads the header of a line-delimited file without checking its schema.
    """
    with open(file_path, encoding='utf-8') as f:
        first = f.readline()
    if not first.strip():
        raise ParseError('missing header', file_path, 1)
    return _parse_line(first, file_path, 1, None)


def decode_records(file_path: str, located: Iterator[Located],
                   decode: Callable[[Dict[str, Any]], T]) -> List[T]:
    """
    Converts parsed records with the given function. A missing field or an ill-typed value is reported as a
    :class:`ParseError` locating the record.
    """
    result = []
    for line, index, data in located:
        try:
            result.append(decode(data))
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as e:
            message = f'missing field {e}' if isinstance(e, KeyError) else str(e)
            raise ParseError(message, file_path, line, index) from e
    return result


def append_journal(file_path: str, record: Dict[str, Any]):
    """
    Appends one record to a journal file and flushes it to disk.
    """
    with open(file_path, 'a', encoding='utf-8', newline='\n') as f:
        f.write(dumps(record) + '\n')
        f.flush()
        os.fsync(f.fileno())


def read_journal(file_path: str) -> List[Dict[str, Any]]:
    """
    Reads the records of a journal file. A truncated last line, left by an interrupted run, is ignored.

    :raises ParseError: if a line other than the last one is malformed
    """
    if not os.path.exists(file_path):
        return []
    with open(file_path, encoding='utf-8') as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    records = []
    for number, text in enumerate(lines, start=1):
        try:
            records.append(_parse_line(text, file_path, number, number - 1))
        except ParseError:
            if number < len(lines):
                raise
            logger.warning('Ignoring the truncated last record of %s.', file_path)
    return records
