import numpy as np
import pytest

from rnan.rng import stream


@pytest.fixture
def rng():
    return stream(2024, 0x7E57)


def seeded(*key) -> np.random.Generator:
    return stream(*key)


ACCEPTANCE_LABELS = {
    "test_a1_gradient_suite": "A1 gradient suite (<1e-4, 5 seeds, <2 min)",
    "test_a2_nonlocal_oracle": "A2 non-local position-pair oracle (1e-10, 20 tensors)",
    "test_a3_identity_initialisations": "A3 identity initialisations",
    "test_a4_parameter_counts": "A4 parameter counts (pm 15%, additivity)",
    "test_a5_overfit_oracle": "A5 overfit oracle (MSE < 1e-3, deterministic)",
    "test_a6_denoising_margin": "A6 desk-scale denoising margin (>= 5 dB)",
    "test_a7_metric_oracles": "A7 metric oracles",
    "test_a8_ablation_harness": "A8 ablation grid harness",
    "test_a9_fusion_mode_algebra": "A9 fusion-mode algebra (1e-10)",
}


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            name = getattr(report, "nodeid", "").rsplit("::", 1)[-1]
            if name in ACCEPTANCE_LABELS:
                results[name] = "PASS" if outcome == "passed" else "FAIL"
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(ACCEPTANCE_LABELS):
        status = results.get(name)
        if status:
            terminalreporter.write_line(f"{status}  {ACCEPTANCE_LABELS[name]}")
