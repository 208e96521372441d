import logging
import sys

import config
from cli import main

# Configure logging
logging.basicConfig(
    level=getattr(logging, config.log_level(), logging.INFO),
    format='%(asctime)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

if __name__ == "__main__":
    sys.exit(main())
