"""
CubicLab - numerical laboratory for the algebras of cubic forms
"""

__version__ = "1.0.0"

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.errors import CubicLabError
