from hypothesis import HealthCheck, settings

settings.register_profile(
    "kdlab",
    derandomize=True,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("kdlab")
