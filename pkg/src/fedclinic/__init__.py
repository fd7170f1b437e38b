import sys

if sys.version_info < (3, 9, 0):
    sys.exit("Python 3.9 or later is required to run fedclinic.")
