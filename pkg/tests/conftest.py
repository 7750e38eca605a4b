import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=150,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# suite-wide checks read state accumulated by every other test
LAST = ("test_c6_counterexamples_within_length_bound", "test_c9_prompt_bounds_recheck_at_next_k")


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda it: it.name in LAST)
