from .catalog_commands import handle_catalog
from .pipeline_commands import handle_analyze, handle_count, handle_oracle, handle_predict, handle_verify

HANDLERS = {
    "analyze": handle_analyze,
    "predict": handle_predict,
    "count": handle_count,
    "verify": handle_verify,
    "oracle": handle_oracle,
    "catalog": handle_catalog,
}

__all__ = [
    'HANDLERS',
    'handle_analyze',
    'handle_predict',
    'handle_count',
    'handle_verify',
    'handle_oracle',
    'handle_catalog',
]
