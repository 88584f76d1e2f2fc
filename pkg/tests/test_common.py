import os

import numpy as np
import pandas as pd
import pytest

import curio_wrapper
import logger
from common import settings
from common.exceptions import ValidationError
from common.helper import Singleton, derive_seed, rng_for, fingerprint_arrays, fingerprint_file, atomic_write, safe_name, format_float, table_to_csv


class TestSeeds(object):
    @staticmethod
    def test_derive_seed_is_stable():
        assert derive_seed(0, "augment", "meter_a") == derive_seed(0, "augment", "meter_a")

    @staticmethod
    @pytest.mark.parametrize("other", (
        (1, "augment", "meter_a"),
        (0, "shuffle", "meter_a"),
        (0, "augment", "meter_b"),
        (0, "augment"),
    ))
    def test_derive_seed_separates_parts(other):
        assert derive_seed(0, "augment", "meter_a") != derive_seed(*other)

    @staticmethod
    def test_rng_for_replays():
        assert np.array_equal(rng_for(3, "x").uniform(size=5), rng_for(3, "x").uniform(size=5))


class TestFiles(object):
    @staticmethod
    def test_atomic_write_text_and_bytes(tmp_path):
        atomic_write(tmp_path / "a" / "b.txt", "hello\n", mode="w")
        atomic_write(tmp_path / "c.bin", b"\x00\x01")
        assert (tmp_path / "a" / "b.txt").read_text() == "hello\n"
        assert (tmp_path / "c.bin").read_bytes() == b"\x00\x01"
        assert sorted(path.name for path in (tmp_path / "a").iterdir()) == ["b.txt"]

    @staticmethod
    def test_atomic_write_keeps_old_file_on_failure(tmp_path):
        path = tmp_path / "keep.txt"
        atomic_write(path, "old", mode="w")
        with pytest.raises(TypeError):
            atomic_write(path, 123, mode="w")
        assert path.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["keep.txt"]

    @staticmethod
    def test_fingerprints(tmp_path):
        path = tmp_path / "f.txt"
        path.write_bytes(b"abc")
        assert fingerprint_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        assert fingerprint_arrays([np.zeros(2)]) != fingerprint_arrays([np.zeros((2, 1))])

    @staticmethod
    @pytest.mark.parametrize(("name", "expected"), (
        ("Panther_office_Hannah", "Panther_office_Hannah"),
        ("a/b c", "a_b_c"),
        ("m~shifted", "m_shifted"),
    ))
    def test_safe_name(name, expected):
        assert safe_name(name) == expected

    @staticmethod
    @pytest.mark.parametrize("value", (0.1, 1 / 3, 1e-300, 12345.678, -0.0))
    def test_format_float_reads_back(value):
        assert float(format_float(value)) == value

    @staticmethod
    def test_table_to_csv():
        table = pd.DataFrame({"name": ["a", "b"], "count": [1, 2], "value": [0.1 + 0.2, 1 / 3]})
        assert table_to_csv(table) == "name,count,value\na,1,0.30000000000000004\nb,2,0.3333333333333333\n"
        assert table_to_csv(table.iloc[:0]) == "name,count,value\n"


class TestSettings(object):
    @staticmethod
    def test_attribute_access():
        assert settings.Settings().Dataset.FoldCount == 5
        assert settings.Settings().Training.GradClip.pconv == 5.0
        assert settings.Settings().Evaluation.Rates == [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]

    @staticmethod
    def test_singleton():
        assert settings.Settings() is settings.Settings()

    @staticmethod
    def test_to_dict_round_trip():
        content = settings.Settings().to_dict()
        assert content["Masks"]["IrregularMaxStrokes"] == 20
        assert "_path" not in content

    @staticmethod
    def test_patched_config(config_file):
        config_file(Dataset={"FoldCount": 3})
        assert settings.Settings().Dataset.FoldCount == 3

    @staticmethod
    def test_reset_restores_default():
        Singleton.reset(settings.Settings)
        assert settings.Settings().Dataset.FoldCount == 5


class TestLogger(object):
    @staticmethod
    def test_general_logger_is_singleton():
        assert logger.GeneralLogger() is logger.GeneralLogger()

    @staticmethod
    def test_file_logger(tmp_path):
        log = logger.Logger(log_file_name="test_common_file.log", print_stdout=False)
        log.info("written")
        path = os.path.join(settings.Settings().Logging.LogFileDir, "test_common_file.log")
        assert os.path.exists(path)

    @staticmethod
    def test_exception_to_string():
        try:
            raise ValueError("broken")
        except ValueError as e:
            assert logger.Logger.exception_to_string(e, with_stack_trace=False) == "ValueError: broken"


class TestCurioWrapper(object):
    @staticmethod
    @pytest.mark.parametrize("workers", (1, 4))
    def test_parallel_map_keeps_order(workers):
        assert curio_wrapper.parallel_map(lambda x: x * x, range(20), max_workers=workers) == [x * x for x in range(20)]

    @staticmethod
    def test_parallel_map_raises_child_error():
        def fail_on_three(x):
            if x == 3:
                raise KeyError(x)
            return x
        with pytest.raises(KeyError):
            curio_wrapper.parallel_map(fail_on_three, range(6), max_workers=3)

    @staticmethod
    @pytest.mark.parametrize(("value", "expected"), (("3", 3), (None, 1)))
    def test_worker_count(monkeypatch, value, expected):
        if value is None:
            monkeypatch.delenv("GRIDFILL_THREADS", raising=False)
        else:
            monkeypatch.setenv("GRIDFILL_THREADS", value)
        assert curio_wrapper.worker_count() == expected

    @staticmethod
    @pytest.mark.parametrize("value", ("0", "many"))
    def test_worker_count_invalid(monkeypatch, value):
        monkeypatch.setenv("GRIDFILL_THREADS", value)
        with pytest.raises(ValidationError):
            curio_wrapper.worker_count()


@pytest.mark.curio
async def test_task_group_wrapper_raises():
    async def fail():
        raise ValueError("child")

    with pytest.raises(ValueError):
        async with curio_wrapper.TaskGroupWrapper() as g:
            await g.spawn(fail)


@pytest.mark.curio
async def test_map_in_threads():
    results = await curio_wrapper.map_in_threads(lambda x: x + 1, [1, 2, 3], max_workers=2)
    assert results == [2, 3, 4]
