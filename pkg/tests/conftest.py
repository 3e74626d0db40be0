import pytest

from bhdsim import ReceiverParams
from bhdsim import defaults


@pytest.fixture
def params():
    """Raw device parameters (perfectly balanced arms)."""
    return ReceiverParams()


@pytest.fixture
def calibrated_params():
    """Device parameters carrying the shipped calibrated arm mismatch."""
    return ReceiverParams(arm_responsivity_mismatch=defaults.CMRR_MISMATCH)
