#!/usr/bin/env python
import os
import sys
import pytest

if __name__ == '__main__':
    # show output results from every test function
    args = ['-v', 'test.py']
    # show the message output for skipped and expected failure tests
    args.append('-rxs')
    # the slowest tests are the family runs; list them
    args.append('--durations=5')
    args.extend(sys.argv[1:])
    # keep the family worker pools small on shared CI machines
    os.environ.setdefault('PHASEKIT_THREADS', '2')
    sys.exit(pytest.main(args))
