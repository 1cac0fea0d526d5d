"""Single entry point that dispatches to the one-way or two-way rate."""

from __future__ import annotations

from .keyrate_oneway import keyrate_oneway
from .keyrate_twoway import keyrate_twoway
from .protocol import KeyRateResult, ProtocolConfig


def keyrate(config: ProtocolConfig) -> KeyRateResult:
    if config.direction == "one_way":
        return keyrate_oneway(config)
    return keyrate_twoway(config)
