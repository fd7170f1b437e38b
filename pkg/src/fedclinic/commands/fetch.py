import logging
import urllib.request
from pathlib import Path
from typing import Optional

from fedclinic import constants
from fedclinic.colors import bold
from fedclinic.constants import DATASET_FILENAME, DATASET_URL, EXIT_CODE_OK, ExitCode
from fedclinic.dataset import clean, load_raw
from fedclinic.util import DataError, OutputError, mkdir

logger = logging.getLogger(__name__)


def _http_get_bytes(url: str) -> bytes:
    try:
        with urllib.request.urlopen(url) as res:
            return res.read()
    except Exception as e:
        logger.debug("Uncaught Exception:", exc_info=True)
        raise DataError(f"Unable to download {url}: {e}") from e


def fetch(dest: Optional[Path], url: str = DATASET_URL) -> ExitCode:
    """Download the UCI file into the data directory and check that it parses"""
    dest_dir = Path(dest) if dest is not None else constants.FEDCLINIC_DATA_DIR
    target = dest_dir / DATASET_FILENAME
    logger.info(f"downloading {url}")
    content = _http_get_bytes(url)

    try:
        mkdir(dest_dir)
        target.write_bytes(content)
    except OSError as e:
        raise OutputError(f"Unable to write {target}: {e.strerror or e}")

    raw = load_raw(target)
    complete = clean(raw)
    print(
        f"saved {bold(str(target))}: {len(raw)} records, {len(complete)} without missing values"
    )
    return EXIT_CODE_OK
