import sys

from selfclassifier.main import main

sys.exit(main())
