""" Docstring for the __init__.py file.

"""
from .episode_config import EpisodeConfig, load_episode_config
from .episode_controller import EpisodeController, EpisodeLog, run_episode
from .file_manager import FileManager
