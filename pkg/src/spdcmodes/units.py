"""Boundary unit conversions: files and flags speak nm/um/mm, the engine SI."""

NM = 1e-9
UM = 1e-6
MM = 1e-3


def nm_to_m(value: float) -> float:
    return value * NM


def um_to_m(value: float) -> float:
    return value * UM


def mm_to_m(value: float) -> float:
    return value * MM


def m_to_nm(value: float) -> float:
    return value / NM


def m_to_um(value: float) -> float:
    return value / UM
