"""Select the solver inner loop: compiled extension or numpy fallback.

Set ``HOLEARN_PURE_PYTHON=1`` to force the fallback (used by the solver
benchmark to compare the two implementations).
"""

from __future__ import annotations

import os

from ._smo_py import smo_core as smo_core_python

if os.environ.get("HOLEARN_PURE_PYTHON", "") == "1":
    HAVE_COMPILED_CORE = False
    smo_core = smo_core_python
else:
    try:
        from ._smo import smo_core as _compiled

        HAVE_COMPILED_CORE = True
        smo_core = _compiled
    except ImportError:
        HAVE_COMPILED_CORE = False
        smo_core = smo_core_python
