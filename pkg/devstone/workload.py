"""Dhrystone-style synthetic CPU load used to give transitions a configurable cost.

The loop is not Dhrystone 2.1; it mixes the same kinds of integer arithmetic,
string comparison, array and record updates, and is calibrated once per process
to iterations per CPU-second so ``burn(seconds)`` keeps the CPU busy for about
that long.
"""

from __future__ import annotations

import logging
import os
import time

log = logging.getLogger(__name__)

CALIBRATION_ENV = "DEVSTONE_DHRY_CALIB"
CALIBRATION_MIN_S = 0.1
_FIRST_CHUNK = 512

_STR_1 = "DHRYSTONE PROGRAM, 1'ST STRING"
_STR_2 = "DHRYSTONE PROGRAM, 2'ND STRING"

_iterations_per_second: float | None = None


def _get_env(name: str, default: str = "") -> str:
    return os.environ.get(name, default)


class _Record:
    __slots__ = ("discr", "enum_comp", "int_comp", "str_comp")

    def __init__(self) -> None:
        self.discr = 0
        self.enum_comp = 2
        self.int_comp = 40
        self.str_comp = _STR_1


def _dhrystone_pass(iterations: int) -> int:
    """Run the synthetic loop ``iterations`` times and return a checksum."""
    array_1 = [0] * 51
    array_2 = [[0] * 51 for _ in range(51)]
    glob = _Record()
    local = _Record()
    int_glob = 0
    bool_glob = False
    checksum = 0

    for run in range(1, iterations + 1):
        int_1 = 2
        int_2 = 3
        str_2 = _STR_2[:-6] + ("STRING" if run & 1 else "STRINg")
        bool_glob = str_2 > _STR_1 or not bool_glob

        while int_1 < int_2:
            int_3 = 5 * int_1 - int_2
            int_1 += 1
        int_3 = int_1 * int_2
        int_2 = int_3 // int_1
        int_2 = 7 * (int_3 - int_2) - int_1

        array_1[8] = int_1 + run % 8
        array_1[9] = array_1[8]
        array_2[8][8] += 1
        array_2[int_1 + 10][8] = array_1[8]
        int_glob = 5

        local.discr = glob.discr
        local.int_comp = glob.int_comp + int_glob
        local.enum_comp = 3 if local.int_comp > 40 else 1
        local.str_comp = str_2 if local.enum_comp == 3 else _STR_1
        glob, local = local, glob

        checksum = (checksum + int_2 + array_1[9] + len(local.str_comp)) & 0xFFFF

    return checksum


def calibrate(*, force: bool = False) -> float:
    """Return synthetic-loop iterations per CPU second, measuring once per process.

    ``DEVSTONE_DHRY_CALIB`` overrides the measurement for reproducible CI runs.
    """
    global _iterations_per_second
    if _iterations_per_second is not None and not force:
        return _iterations_per_second

    override = _get_env(CALIBRATION_ENV)
    if override:
        try:
            value = float(override)
        except ValueError:
            log.warning("Ignoring non-numeric %s=%r", CALIBRATION_ENV, override)
        else:
            if value > 0:
                _iterations_per_second = value
                log.info("Dhrystone calibration from %s: %.0f it/s", CALIBRATION_ENV, value)
                return value
            log.warning("Ignoring non-positive %s=%r", CALIBRATION_ENV, override)

    iterations = _FIRST_CHUNK
    while True:
        start = time.process_time()
        _dhrystone_pass(iterations)
        elapsed = time.process_time() - start
        if elapsed >= CALIBRATION_MIN_S:
            break
        iterations *= 2

    _iterations_per_second = iterations / elapsed
    log.info(
        "Dhrystone calibration: %.0f it/s (%d it in %.3fs)",
        _iterations_per_second,
        iterations,
        elapsed,
    )
    return _iterations_per_second


def burn(duration: float) -> int:
    """Consume roughly ``duration`` seconds of CPU. Returns the iterations executed."""
    if duration <= 0:
        return 0
    iterations = max(1, round(duration * calibrate()))
    _dhrystone_pass(iterations)
    return iterations
