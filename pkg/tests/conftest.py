import hypothesis
import pytest

from fcsim import default_config, fit_f2
from fcsim.models import ModelKind
from fcsim.physics import matched_f2, sigma_star
from fcsim.runner import run_batch

hypothesis.settings.register_profile("fcsim", deadline=None, max_examples=60)
hypothesis.settings.load_profile("fcsim")

#: Desk scale: 10% of the full experiment count at full pairs-per-experiment,
#: so per-experiment statistics keep their meaning.
DESK_EXPERIMENTS = 50


@pytest.fixture(scope="session")
def desk_cfg():
    return default_config().replace(experiments=DESK_EXPERIMENTS)


@pytest.fixture(scope="session")
def desk_collapse_raw(desk_cfg):
    return run_batch(ModelKind.COLLAPSE, desk_cfg, f2=1.0)


@pytest.fixture(scope="session")
def desk_local_raw(desk_cfg):
    return run_batch(ModelKind.LOCAL_REALISTIC, desk_cfg, f2=1.0)


@pytest.fixture(scope="session")
def desk_sigma_star(desk_cfg):
    return sigma_star(matched_f2(desk_cfg), desk_cfg)


@pytest.fixture(scope="session")
def desk_smeared_raw(desk_cfg, desk_sigma_star):
    return run_batch(ModelKind.SMEARED, desk_cfg, sigma=desk_sigma_star, f2=1.0)


@pytest.fixture(scope="session")
def desk_f2_fit(desk_collapse_raw):
    return fit_f2(desk_collapse_raw)
