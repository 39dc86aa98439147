"""Score-file pair keys.

This re-implements the pipeline's documented hashing rule so the service
stays decoupled from the pipeline package:

    key = sha256(utf8(collapse_ws(statement) + "\\n" + collapse_ws(response)))

where collapse_ws collapses whitespace runs to single spaces and strips the
ends.  The shared fixture tests/data/nsp_keys.json (at the repository root)
pins both implementations to the same bytes.
"""

import hashlib


def canonical_text(text: str) -> str:
    return " ".join(text.split())


def pair_key(statement: str, response: str) -> str:
    payload = canonical_text(statement) + "\n" + canonical_text(response)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
