from riskmdp.utils.serialize import dump_json, dumps, round_floats, save_result

__all__ = ["dump_json", "dumps", "round_floats", "save_result"]
