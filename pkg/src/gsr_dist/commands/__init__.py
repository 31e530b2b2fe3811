from gsr_dist.commands import curves, moments, spectrum, validate_mc

COMMANDS = [spectrum, curves, moments, validate_mc]

__all__ = ["COMMANDS"]
