import sys

from cffqnn.cli import main

sys.exit(main())
