import numpy as np
import pytest

from polarpipe.mosaic import MosaicLayout, RawMosaicImage


def random_raw(rng, h=16, w=16, bit_depth=16, layout=None):
    top = (1 << bit_depth) - 1
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    px = rng.integers(0, top + 1, size=(h, w)).astype(dtype)
    return RawMosaicImage(px, bit_depth, layout or MosaicLayout())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts, one line per criterion."""
    import sys

    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        ok, detail = verdicts[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
