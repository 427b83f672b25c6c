# vim: set expandtab shiftwidth=4 softtabstop=4:

import sys

from .cmd.cmd import main

sys.exit(main())
