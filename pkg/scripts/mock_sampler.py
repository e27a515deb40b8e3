#!/usr/bin/env python3
"""Reference mock sampler: replays a transcript file over the ndjson sampler
protocol (request {"id","caption","prefix","max_new"} on stdin, response
{"id","continuation"} on stdout).

Transcript format: JSON object mapping a caption to its ordered list of
continuations; "*" is the fallback key. Each request consumes the next entry
for its caption. Stdlib only, so it can serve as a subprocess from any
environment.

Usage: mock_sampler.py TRANSCRIPT.json
"""

import json
import sys


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: mock_sampler.py TRANSCRIPT.json", file=sys.stderr)
        return 2
    with open(sys.argv[1], encoding="utf-8") as f:
        transcript = json.load(f)
    cursors = {}

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        caption = request.get("caption", "")
        key = caption if caption in transcript else "*"
        entries = transcript.get(key, [])
        i = cursors.get(key, 0)
        if i >= len(entries):
            print(
                json.dumps({"id": request.get("id"), "error": "transcript exhausted"}),
                flush=True,
            )
            continue
        cursors[key] = i + 1
        print(
            json.dumps(
                {"id": request.get("id"), "continuation": entries[i]},
                ensure_ascii=False,
            ),
            flush=True,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
