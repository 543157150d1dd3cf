import sys
from limbflow.cli import main
sys.exit(main())
