__version__ = '0.1'

from . import graph
from . import spectral
from . import lambdacert
from . import frames
from . import setsearch
from . import verify
