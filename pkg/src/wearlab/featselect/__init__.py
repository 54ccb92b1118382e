from .base import METHODS, SelectionConfig, SelectionResult
from .boruta import boruta
from .genetic import genetic_select
from .scoring import CVScorer, cv_score
from .sffs import sffs


def run_selector(matrix, config: SelectionConfig, executor=None) -> SelectionResult:
    if config.method == "sffs":
        return sffs(matrix, config, executor)
    if config.method == "boruta":
        return boruta(matrix, config)
    return genetic_select(matrix, config, executor)
