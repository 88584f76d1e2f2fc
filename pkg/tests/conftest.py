import pytest
import inspect
import curio
import os
import json

import numpy as np
import pandas as pd

import logger
from common import settings
from common.helper import Singleton
from dataset.image import EnergyImage, NormParams, reshape_to_image
from dataset.records import MeterType, HOURS_PER_WEEK, WEEKS_PER_YEAR
from synth.fleet import SynthSpec, generate_fleet

test_kernel = None


def _get_kernel():
    global test_kernel
    if test_kernel is None:
        test_kernel = curio.Kernel()
    return test_kernel


def kernel_fixture():
    return _get_kernel()


@pytest.fixture(scope="session", autouse=True)
def session_start_fixture():
    logger.GeneralLogger()


@pytest.fixture(scope="function", autouse=True)
def log_function(session_start_fixture):
    """
    Logs currently running name of test-function
    """
    logger.info("Current test: " + os.environ.get('PYTEST_CURRENT_TEST'))


@pytest.fixture(scope="function")
def config_file(tmp_path):
    """
    Writes a config.json patched by given sections and points Settings at it, restores afterwards
    """
    written = []

    def write(**sections):
        content = settings.Settings().to_dict()
        for section, values in sections.items():
            content[section].update(values)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(content))
        Singleton.reset(settings.Settings)
        settings.Settings(path)
        written.append(path)
        return path
    yield write
    if written:
        Singleton.reset(settings.Settings)


def weekly_image(meter_id="site0_electricity_00", site_id="site0", meter_type=MeterType.Electricity, profile=None, validity=None):
    """
    Perfectly weekly periodic image: every week column equals profile (multiples of 1/1024)
    """
    if profile is None:
        profile = (np.arange(HOURS_PER_WEEK) % 24 + np.arange(HOURS_PER_WEEK) // 24 * 3) / 1024
    matrix = np.repeat(np.asarray(profile, dtype=np.float64)[:, None], WEEKS_PER_YEAR, axis=1)
    validity = np.ones(matrix.shape, dtype=bool) if validity is None else validity
    return EnergyImage(meter_id=meter_id, site_id=site_id, meter_type=meter_type, matrix=matrix, validity=validity,
                       norm=NormParams(0.0, 1.0), week0_start=pd.Timestamp("2016-01-04"))


@pytest.fixture(scope="function")
def make_weekly_image():
    return weekly_image


@pytest.fixture(scope="session")
def small_fleet():
    """
    20 synthetic meters on 5 sites
    """
    return generate_fleet(SynthSpec(sites=5, meters_per_site=4, seed=0))


@pytest.fixture(scope="session")
def small_images(small_fleet):
    return [reshape_to_image(record) for record in small_fleet]


@pytest.mark.tryfirst
def pytest_pycollect_makeitem(collector, name, obj):
    """
    From https://docs.pytest.org/en/latest/reference.html
    return custom item/collector for a python object in a module, or None
    Stops at first non-None result, see firstresult: stop at first non-None result
    """
    if collector.funcnamefilter(name) and inspect.iscoroutinefunction(obj):
        item = pytest.Function.from_parent(name=name, parent=collector)
        if 'curio' in item.keywords:
            return list(collector._genfunctions(name, obj))


@pytest.mark.tryfirst
def pytest_pyfunc_call(pyfuncitem):
    """
    From https://docs.pytest.org/en/latest/reference.html
    call underlying test function.
    Stops at first non-None result, see firstresult: stop at first non-None result
    """
    _test_kernel = _get_kernel()
    if 'curio' in pyfuncitem.keywords:
        funcargs = pyfuncitem.funcargs
        testargs = {arg: funcargs[arg] for arg in pyfuncitem._fixtureinfo.argnames}
        fut = pyfuncitem.obj(**testargs)
        try:
            _test_kernel.run(fut)
        except curio.TaskError as e:
            raise e.__cause__ from e
        return True


def pytest_configure(config):
    # register an additional marker
    config.addinivalue_line(
        "markers", "curio: Asynchronous test functions"
    )


def pytest_sessionfinish(session, exitstatus):
    """ whole test run finishes. """
    if test_kernel is not None:
        test_kernel.run(shutdown=True)
