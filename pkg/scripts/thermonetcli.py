#!/usr/bin/env python
# vim:sw=4:ts=4:et
"""Launch the thermonet command line from a source checkout."""
import sys

from thermonet.cli import main

if __name__ == '__main__':
    sys.exit(main())
