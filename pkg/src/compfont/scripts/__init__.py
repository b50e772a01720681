from .coverage import Coverage, coverage, minimal_reference_set
from .schema import (BUILTIN_SCHEMAS, ComponentLabel, ComponentSchema, compose, decompose,
                     get_schema, load_schema)

__all__ = ["BUILTIN_SCHEMAS", "ComponentLabel", "ComponentSchema", "Coverage", "compose",
           "coverage", "decompose", "get_schema", "load_schema", "minimal_reference_set"]
