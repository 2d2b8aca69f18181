from hypothesis import settings

# fixed example sequences keep the statistical property tests reproducible
settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")
