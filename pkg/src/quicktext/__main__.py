import sys

from quicktext.cli import main

sys.exit(main())
