"""Canonical JSON: sorted keys, UTF-8, no insignificant whitespace, floats
as shortest round-trip decimals. Golden-file and rerun comparisons are
bit-exact because serialize(parse(serialize(x))) == serialize(x)."""

from __future__ import annotations

import json
from typing import Any


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def canonical_dump_path(obj: Any, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_dumps(obj))
        f.write("\n")
