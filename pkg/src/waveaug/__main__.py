import sys

from waveaug.cli import main

sys.exit(main())
