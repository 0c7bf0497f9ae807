"""Probe runtime for composed programs.

Usage: python snipexec_runtime.py PROGRAM RESULTS

Appends one ``P <id>`` line to RESULTS per probe fire and, if the program
raises, a final ``E <type>\\t<line>\\t<base64 message>`` record.
"""

import base64
import os
import sys

SINK_FAILURE = 97

_sink = None


def _write(record):
    try:
        _sink.write(record)
        _sink.flush()
    except Exception:
        os._exit(SINK_FAILURE)


def _l_(probe_id, value=None):
    _write("P %d\n" % probe_id)
    return value


def _program_line(exc, program_path):
    line = 0
    tb = exc.__traceback__
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == program_path:
            line = tb.tb_lineno
        tb = tb.tb_next
    if line == 0 and isinstance(exc, SyntaxError) and exc.filename == program_path:
        line = exc.lineno or 0
    return line


def run_program(program_path, results_path):
    global _sink
    try:
        _sink = open(results_path, "a", buffering=1, encoding="utf-8")
    except OSError:
        return SINK_FAILURE
    with open(program_path, encoding="utf-8") as fh:
        source = fh.read()
    namespace = {"__name__": "__main__", "__file__": program_path, "__builtins__": __builtins__}
    try:
        exec(compile(source, program_path, "exec"), namespace)
    except BaseException as exc:
        try:
            message = str(exc)
        except Exception:
            message = ""
        encoded = base64.b64encode(message.encode("utf-8", "replace")).decode("ascii")
        _write("E %s\t%d\t%s\n" % (type(exc).__name__, _program_line(exc, program_path), encoded))
        return 1
    return 0


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.stderr.write(__doc__)
        sys.exit(2)
    # Composed programs import the probe by module name; serve them this instance.
    sys.modules["snipexec_runtime"] = sys.modules["__main__"]
    program, results = os.path.abspath(sys.argv[1]), os.path.abspath(sys.argv[2])
    sys.argv = [program]
    sys.path.insert(0, os.path.dirname(program))
    status = run_program(program, results)
    sys.stdout.flush()
    sys.stderr.flush()
    os._exit(status)
