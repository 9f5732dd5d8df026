import sys

from zo_goldstein.cli import main

sys.exit(main())
