"""Contact detection, classification and reaction for a planar 3-RRR parallel robot."""
from .dynamics import DynamicsParams, RobotModel, compute_terms
from .kinematics import ContactLocation, JointConfig, PlatformPose, RobotGeometry

__all__ = ["ContactLocation", "DynamicsParams", "JointConfig", "PlatformPose", "RobotGeometry",
           "RobotModel", "compute_terms"]
