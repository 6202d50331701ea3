import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conduit import kernels  # noqa: E402
from conduit.registry import JurisdictionRegistry, RateMatrix  # noqa: E402

ACCEPTANCE_LINES: list[str] = []

BACKENDS = ["python"] + (["cython"] if kernels.compiled is not None else [])


def write_registry(path, codes):
    path.write_text("code,name\n" + "".join(f"{c},{c}\n" for c in codes), encoding="utf-8")
    return path


def write_matrix(path, codes, rates):
    """``rates`` maps ``(src, dst)`` codes to cell strings; missing pairs stay empty."""
    lines = ["source\\dest," + ",".join(codes)]
    for a in codes:
        lines.append(a + "," + ",".join("" if a == b else str(rates.get((a, b), "")) for b in codes))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def make_inputs(tmp_path):
    """Write a registry and one matrix, return their paths."""
    def make(codes, rates, name="m.csv"):
        reg = write_registry(tmp_path / "registry.csv", codes)
        mat = write_matrix(tmp_path / name, codes, rates)
        return reg, mat
    return make


# payment A->B is cheaper routed through C
DETOUR = {
    ("A", "B"): 25, ("A", "C"): 0, ("C", "B"): 5,
    ("B", "A"): 30, ("B", "C"): 30, ("C", "A"): 30,
}
# two-vertex digraph, asymmetric rates
PAIR = {("A", "B"): 20, ("B", "A"): 30}
# asymmetric pair for the max rule
ASYM = {("UK", "Afghanistan"): 0, ("Afghanistan", "UK"): 20}


def rate_matrix(codes, rates, income="dividends"):
    reg = JurisdictionRegistry.from_codes(codes)
    rows = [[None if a == b else rates[(a, b)] for b in codes] for a in codes]
    return reg, RateMatrix.from_rates(rows, income)


@pytest.fixture
def detour():
    return rate_matrix(["A", "B", "C"], DETOUR)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
