import os
import unittest

SLOW_ENV = "SFORGE_SLOW"

# Long-running acceptance checks; run with SFORGE_SLOW=1.
slow = unittest.skipUnless(
    os.environ.get(SLOW_ENV, "").strip() not in ("", "0"),
    f"set {SLOW_ENV}=1 to run"
)
