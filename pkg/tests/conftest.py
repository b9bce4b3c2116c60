import numpy as np
import pytest

from activist_targets.data import Panel
from activist_targets.schema import FeatureSchema
from activist_targets.synthgen import SynthSpec, generate

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def tiny_schema(spec=None) -> FeatureSchema:
    spec = spec or [("g1", "governance", "continuous"), ("g2", "governance", "continuous"),
                    ("o1", "ownership", "continuous"), ("v1", "valuation", "continuous")]
    return FeatureSchema.from_names(spec)


def make_panel(values, label=None, schema=None, year=None, l2=None, l3=None, company=None) -> Panel:
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    if schema is None:
        schema = FeatureSchema.from_names([(f"f{j}", "governance", "continuous") for j in range(d)])
    company = company if company is not None else [f"C{i:04d}" for i in range(n)]
    year = year if year is not None else [2016] * n
    l2 = l2 if l2 is not None else ["A"] * n
    l3 = l3 if l3 is not None else ["A1"] * n
    return Panel(schema, np.array(company, dtype=object), np.array(year), np.array(l2, dtype=object),
                 np.array(l3, dtype=object), values, None if label is None else np.asarray(label))


@pytest.fixture(scope="session")
def small_synth():
    """2,000-row planted-signal panel and its ground truth."""
    return generate(SynthSpec(n_rows=2000, positive_rate=0.1, seed=11))
