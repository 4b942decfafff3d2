"""Partial filter models, their completion order, and stratified positivity."""

from pathlib import Path

from ..errors import ModelError, ParseError, ResourceError
from .checks import Violation, check_model
from .core import Model
from .dsl import load_model, model_to_text, parse_model, parse_type, u_truncation, z_truncation
from .strat import StratWitness, sp_search, sp_verify, sp_verify_closure
from .typeexpr import OMEGA, Arrow, Atom, TypeExpr, arrow, atom, inter, inter_all, show, sort_key
from .universe import type_universe, unfolding_leq

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"
SHIPPED = ("dinf", "pinf", "norm", "z3", "u2", "kerth")


def shipped_model(name: str) -> Model:
    """Load one of the model files that ship with the package."""
    return load_model(MODELS_DIR / f"{name}.dm")


def ext_of(t: TypeExpr, m: Model):
    return m.ext_of(t)


def leq(a: TypeExpr, b: TypeExpr, m: Model) -> bool:
    return m.leq(a, b)


def eq(a: TypeExpr, b: TypeExpr, m: Model) -> bool:
    return m.eq(a, b)


def meet(a: TypeExpr, b: TypeExpr, m: Model) -> TypeExpr:
    return m.meet(a, b)


__all__ = [
    "Arrow", "Atom", "MODELS_DIR", "Model", "ModelError", "OMEGA", "ParseError",
    "ResourceError", "SHIPPED", "StratWitness", "TypeExpr", "Violation", "arrow", "atom",
    "check_model", "eq", "ext_of", "inter", "inter_all", "leq", "load_model", "meet",
    "model_to_text", "parse_model", "parse_type", "shipped_model", "show", "sort_key",
    "sp_search", "sp_verify", "sp_verify_closure", "type_universe", "u_truncation",
    "unfolding_leq", "z_truncation",
]
