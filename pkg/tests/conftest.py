import pytest

from levystop.levy_model import LevyModel


@pytest.fixture
def cl():
    return LevyModel.cramer_lundberg(c=0.5, mu=1.0, eta=1.0)


@pytest.fixture
def jd():
    return LevyModel.jump_diffusion(sigma=1.0, c=0.5, mu=1.0, eta=1.0)


@pytest.fixture
def bm():
    return LevyModel.brownian_drift(sigma=1.0, c=-1.0)


MODELS = {
    "cl": LevyModel.cramer_lundberg(0.5, 1.0, 1.0),
    "jd": LevyModel.jump_diffusion(1.0, 0.5, 1.0, 1.0),
    "bm": LevyModel.brownian_drift(1.0, -1.0),
    "cl_heavy": LevyModel.cramer_lundberg(1.0, 3.0, 0.5),
    "jd_small": LevyModel.jump_diffusion(0.3, 0.2, 2.0, 3.0),
    "bm_wide": LevyModel.brownian_drift(2.0, -0.5),
}


@pytest.fixture(params=sorted(MODELS))
def any_model(request):
    return MODELS[request.param]
