"""Exception and warning types shared across the package."""


class CvPhotonError(Exception):
    """Base class for all package-specific errors."""


class UnnormalizedStateError(CvPhotonError):
    """State construction received amplitudes whose L2 norm is not 1."""


class GridMismatchError(CvPhotonError):
    """Two states live on different grids or representations."""


class SupportOverflowError(CvPhotonError):
    """A state (or its image under a gate) does not fit the grid."""


class RepresentationError(CvPhotonError):
    """Operation applied in the wrong basis (position vs wavevector)."""


class ScaleMismatchError(CvPhotonError):
    """Pinned scaling parameter d is inconsistent with the requested optics."""


class NyquistViolationError(CvPhotonError):
    """Requested displacement exceeds the conjugate grid's Nyquist bound."""


class NonGaussianGateError(CvPhotonError):
    """Gate has no 2x2 symplectic (ABCD) image."""


class NonSymplecticError(CvPhotonError):
    """Matrix is not symplectic (det != 1) within tolerance."""


class RealizabilityError(CvPhotonError):
    """Gate program cannot be lowered to a physical layout."""


class UnsupportedGateError(CvPhotonError):
    """Descriptor kind cannot be executed by the simulator."""


class TopologyError(CvPhotonError):
    """Cluster specification outside the supported node/edge structure."""


class DofLabelError(CvPhotonError):
    """Unknown or duplicated degree-of-freedom label."""


class ZeroProbabilityError(CvPhotonError):
    """Projective measurement requested at an outcome of ~zero density."""


class PumpError(CvPhotonError):
    """Pump profile is unnormalizable or not representable on the grid."""


class ScenarioError(CvPhotonError):
    """Scenario file failed schema validation or execution; the message
    names the field responsible."""


class NyquistWarning(UserWarning):
    """Phase gradient approaches the grid's Nyquist limit (aliasing risk)."""


class NormalizationWarning(UserWarning):
    """A gate produced norm drift beyond tolerance; output renormalized."""
