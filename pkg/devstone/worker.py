"""Child-process entry point for one isolated trial (``python -m devstone.worker``).

Reads a :class:`TrialRequest` as JSON on stdin, caps its own address space,
then writes one JSON line when the model is built and one with the result.
Logging goes to stderr so stdout carries protocol lines only.
"""

from __future__ import annotations

import logging
import resource
import sys

from devstone.harness import execute_trial, self_peak_rss
from devstone.models import TrialRequest, WorkerMessage

log = logging.getLogger("devstone.worker")


def _send(message: WorkerMessage) -> None:
    sys.stdout.write(message.model_dump_json() + "\n")
    sys.stdout.flush()


def _limit_memory(mem_cap: int) -> None:
    try:
        _, hard = resource.getrlimit(resource.RLIMIT_AS)
        limit = mem_cap if hard == resource.RLIM_INFINITY else min(mem_cap, hard)
        resource.setrlimit(resource.RLIMIT_AS, (limit, hard))
    except (ValueError, OSError) as exc:
        log.warning("Could not set RLIMIT_AS to %d: %s", mem_cap, exc)


def main() -> None:
    logging.basicConfig(
        level=logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    request = TrialRequest.model_validate_json(sys.stdin.read())
    _limit_memory(request.mem_cap)

    outcome = execute_trial(
        request.spec,
        request.time_cap,
        on_built=lambda: _send(WorkerMessage(event="built")),
    )
    outcome.peak_memory = self_peak_rss()
    _send(WorkerMessage(event="result", outcome=outcome))


if __name__ == "__main__":
    main()
