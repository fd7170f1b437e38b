import os
import sys

if not __package__:
    # Running from source. Add the source directory to the system
    # path to allow direct invocation, such as:
    #   python src/fedclinic --help
    fedclinic_package_source_path = os.path.dirname(os.path.dirname(__file__))
    sys.path.insert(0, fedclinic_package_source_path)

from fedclinic.main import cli  # noqa

if __name__ == "__main__":
    sys.exit(cli())
