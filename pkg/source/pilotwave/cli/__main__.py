import sys

from pilotwave.cli.main import main

sys.exit(main())
