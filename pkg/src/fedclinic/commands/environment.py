import os
from typing import Optional

from fedclinic import constants
from fedclinic.constants import DATASET_ENV_VAR, DATASET_FILENAME, EXIT_CODE_OK, ExitCode
from fedclinic.util import ConfigError


def environment(value: Optional[str]) -> ExitCode:
    """Print a list of environment variables and paths used by fedclinic"""
    environment_variables = [
        DATASET_ENV_VAR,
        "FEDCLINIC_LOG_DIR",
        "FEDCLINIC_DATA_DIR",
    ]
    derived_values = {
        "FEDCLINIC_LOG_DIR": constants.FEDCLINIC_LOG_DIR,
        "FEDCLINIC_DATA_DIR": constants.FEDCLINIC_DATA_DIR,
        DATASET_ENV_VAR: os.environ.get(DATASET_ENV_VAR)
        or constants.FEDCLINIC_DATA_DIR / DATASET_FILENAME,
    }
    if value is None:
        print("Environment variables (set by user):")
        print("")
        for env_variable in environment_variables:
            env_value = os.getenv(env_variable, "")
            print(f"{env_variable}={env_value}")
        print("")
        print("Derived values (computed by fedclinic):")
        print("")
        for env_variable in derived_values:
            print(f"{env_variable}={derived_values[env_variable]}")
    elif value in derived_values:
        print(derived_values[value])
    else:
        raise ConfigError("Variable not found.")

    return EXIT_CODE_OK
