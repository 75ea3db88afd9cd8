"""
Fan Repository Module

Fan files on disk, the bundled catalog, and the JSON <-> model mapping.
"""

from .fan_repository import FanRepository, parse_fan_file, serialize_pair
from .fan_mapper import dict_to_pair, pair_to_dict

__all__ = [
    'FanRepository',
    'parse_fan_file',
    'serialize_pair',
    'dict_to_pair',
    'pair_to_dict',
]
