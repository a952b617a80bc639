from .function_specs import load_function_spec, parse_function_spec, dump_function_spec

__all__ = ["load_function_spec", "parse_function_spec", "dump_function_spec"]
