"""Minimal example agent: explore, answer, submit.

Run a server first (from the main package):

    execgym serve --port 7710 --backend local

then:

    python -m execgym_client.example_agent --port 7710 --index 0
"""

from __future__ import annotations

import argparse

from .client import RemoteEnv


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7710)
    parser.add_argument("--env", default="sql")
    parser.add_argument("--index", type=int, default=0)
    args = parser.parse_args()

    with RemoteEnv(args.host, args.port, env=args.env) as env:
        obs = env.reset(args.index)
        print(f"task: {obs.text}")

        # look around, then lean on the interim reward to decide
        for probe in ("SHOW TABLES",):
            outcome = env.step(probe)
            print(f"{probe!r} -> {outcome.observation.text}")

        outcome = env.submit()
        print(f"submitted. reward={outcome.reward} done={outcome.done}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
