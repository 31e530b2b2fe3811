import sys

from gsr_dist.main import main

sys.exit(main())
