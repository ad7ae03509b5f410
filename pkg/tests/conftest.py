from hypothesis import settings

# first calls build binomial tables and compile the quantile kernel
settings.register_profile("default", deadline=None)
settings.load_profile("default")
