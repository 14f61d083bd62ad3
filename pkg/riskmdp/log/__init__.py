from riskmdp.log.log import set_run_id, setup_logging

__all__ = ["set_run_id", "setup_logging"]
