"""Grid experiments on Lipschitz approximation of Sobolev maps.

Modules
-------
grid          box domains, fields, derivatives, norms, segment distances
maximal       maximal function, good sets, Whitney covers, partitions of unity
truncation    Lipschitz truncation and retraction sweeps
constructions pyramid, capacity bumps, wrinkles, flattening maps
experiments   named experiment runner (also ``python -m lipdensity``)
io            binary/CSV/JSON/OBJ formats
"""
from .grid import (BoxDomain, Field, Polyline, SegmentSet, distance_to_segments, gradient,
                   gradient_magnitude, lipschitz_estimate, lp_norm, point_segment_distance,
                   polyline_length, trace_line, w1p_norm)
from .maximal import (GoodSetMask, PartitionOfUnity, WhitneyCover, WhitneyCoverError,
                      dyadic_radii, good_set, maximal_function, partition_of_unity,
                      pointwise_inequality_check, poincare_check, whitney_cover)
from .truncation import (PointCloudTarget, SegmentTarget, SphereTarget, TruncationResult,
                         approximation_sweep, distance_to_target, retract, truncate)

__version__ = "0.1.0"
