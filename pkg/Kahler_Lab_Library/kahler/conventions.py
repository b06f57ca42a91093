"""Conventions shared by every module of the lab.

All constants that depend on how forms, Laplacians and time derivatives are
normalized live here, so that a factor is never restated elsewhere.

    i dz^dzbar        = 2 dx^dy
    d/dtau            = 1/2 d/dt            (data independent of Im tau)
    d^2/dtau dtaubar  = 1/4 d^2/dt^2
    i dtau^dtaubar    = 2 dt^dy
    Delta             = d^2/dtau dtaubar = 1/4 (d_x^2 + d_y^2)
    curvature <= -a   <=> Delta log g >= a g

Frames used for sampled forms:

    torus   (1,1) forms and densities against i dz^dzbar, (0,1) forms against dzbar
    cp1     (1,1) forms and densities against the reference Kaehler form,
            (0,1) forms against dbar log|z|^2 = dzbar / zbar
"""

LOGNAME = "kahler"

IDZDZBAR_AREA_FACTOR = 2.0
TAU_FIRST_DERIVATIVE_FACTOR = 0.5
TAU_LAPLACE_FACTOR = 0.25
IDTAU_AREA_FACTOR = 2.0

DEFAULT_RELATIVE_TOLERANCE = 1e-8
MIN_RESOLUTION = 16


class ManifoldKind:
    TORUS = "torus"
    CP1 = "cp1-invariant"
    PRODUCT = "product"


class FieldKind:
    TORUS_CONSTANT = "torus-constant"
    CP1_LINEAR = "cp1-linear"
    PRODUCT = "product"


class Provenance:
    INDUCED = "induced"
    TORIC = "toric"
    MANUAL = "manual"


class VelocityMethod:
    FLOW = "flow"
    LEGENDRE = "legendre"
    CENTRAL = "central"


class KahlerLabException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return repr(self.msg)


class ResolutionException(KahlerLabException):
    def __init__(self, msg):
        super(ResolutionException, self).__init__(msg)


class PositivityException(KahlerLabException):
    def __init__(self, msg, location=None):
        super(PositivityException, self).__init__(msg)
        self.location = location


class ConvexityException(KahlerLabException):
    def __init__(self, msg, t=None, m=None):
        super(ConvexityException, self).__init__(msg)
        self.t = t
        self.m = m


class CompatibilityException(KahlerLabException):
    def __init__(self, msg):
        super(CompatibilityException, self).__init__(msg)


class ExactnessException(KahlerLabException):
    def __init__(self, msg, obstruction=None):
        super(ExactnessException, self).__init__(msg)
        self.obstruction = obstruction


class UnsupportedFieldException(KahlerLabException):
    def __init__(self, msg):
        super(UnsupportedFieldException, self).__init__(msg)


class TimeNodeException(KahlerLabException):
    def __init__(self, msg):
        super(TimeNodeException, self).__init__(msg)


class LeafException(KahlerLabException):
    def __init__(self, msg):
        super(LeafException, self).__init__(msg)


class SampleException(KahlerLabException):
    def __init__(self, msg):
        super(SampleException, self).__init__(msg)


class PreconditionException(KahlerLabException):
    def __init__(self, msg, member=None, margin=None):
        super(PreconditionException, self).__init__(msg)
        self.member = member
        self.margin = margin


class IncompatibleMeasureException(KahlerLabException):
    def __init__(self, msg):
        super(IncompatibleMeasureException, self).__init__(msg)


class ConfigException(KahlerLabException):
    def __init__(self, msg, key_path=None):
        super(ConfigException, self).__init__(msg)
        self.key_path = key_path


def real_time_laplacian(second_t_derivative):
    """d^2/dtau dtaubar of data independent of Im tau."""
    return TAU_LAPLACE_FACTOR * second_t_derivative


def curvature_constant(dimension, volume):
    """Upper curvature bound -2/(n V) of the K-energy metric, returned as 2/(n V)."""
    return 2.0 / (dimension * volume)


def leaf_curvature_constant(dimension):
    return 2.0 / dimension
