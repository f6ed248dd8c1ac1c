""" Docstring for the test_log.py file.

"""
import logging

import pytest

from log import setup_logging


@pytest.fixture(autouse=True)
def close_configured_handlers():
    """ Detaches the console and file handlers installed by setup_logging so log files under tmp_path close. """
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if type(handler) in (logging.StreamHandler, logging.FileHandler):
            root.removeHandler(handler)
            handler.close()


@pytest.mark.parametrize("stage, console_level", [("dev", logging.INFO), ("prod", logging.WARNING)])
def test_stage_selects_the_console_level(tmp_path, stage, console_level):
    setup_logging(stage, str(tmp_path / "logs"))
    stream = [h for h in logging.getLogger().handlers if type(h) is logging.StreamHandler]
    assert [h.level for h in stream] == [console_level]


def test_log_file_is_created_in_a_new_directory(tmp_path):
    log_dir = tmp_path / "nested" / "logs"
    setup_logging("dev", str(log_dir))
    logging.getLogger("tests").info("scan step 1")
    for handler in logging.getLogger().handlers:
        handler.flush()
    files = list(log_dir.glob("*.log"))
    assert len(files) == 1
    assert "scan step 1" in files[0].read_text()


def test_unknown_stage_falls_back_to_dev(tmp_path):
    setup_logging("staging", str(tmp_path / "logs"))
    stream = [h for h in logging.getLogger().handlers if type(h) is logging.StreamHandler]
    assert [h.level for h in stream] == [logging.INFO]
