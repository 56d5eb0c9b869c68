import sys

from bridge_client.client import main

sys.exit(main())
