import pytest

from driverid import IngestConfig, decompose_timestamp, parse_csv, synth

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def alice_bob(tmp_path_factory):
    """Decomposed 2,000-row Alice/Bob corpus generated through the CLI profile."""
    outdir = tmp_path_factory.mktemp("alice_bob")
    profile = synth.load_profile("alice-bob")
    csv_path, cfg_path = synth.write_corpus(profile, 2000, 1234, outdir)
    ds = parse_csv(csv_path, IngestConfig.from_file(cfg_path))
    return decompose_timestamp(ds)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    if "test_acceptance.py" not in str(report.nodeid):
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_LINES.append(f"[acceptance] {name}: {report.outcome.upper()}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
