"""Sensorless hand guidance for serial robot arms.

Tracked hand motion near a kinematic chain becomes joint commands through a
plane-projection angle decomposition with residual propagation; a
seed-initialized ICP pipeline registers the robot model into the scene so
hand positions can be interpreted in the robot frame. Ships as a library,
a CLI (``handguide``), a websocket session service and a browser UI.
"""

from .controller import ControllerState, Trajectory, record, replay, set_target, tick
from .errors import (ChainFormatError, ChainValidationError, DegenerateRadiusError,
                     EmptySceneError, HandguideError, ProtocolError,
                     StaleSampleError, TargetLimitError, TrajectoryError)
from .geometry import RigidTransform, quat_from_axis_angle, quat_multiply, quat_rotate
from .guidance import (ActiveZone, AppliedRotation, GuidanceConfig, GuidanceEngine,
                       GuidanceUpdate, HandSample, active_link, apply_angle_update,
                       build_active_zone, joint_angle_delta, project_onto_joint_plane,
                       projection_vector, propagate_hand_motion, rotate_about_joint)
from .ik import drag_end_effector
from .kinematics import (Joint, JointState, KinematicChain, Link, end_effector_pose,
                         forward_kinematics, joint_world_frame, load_chain, parse_chain)
from .meshes import TriangleMesh, load_mesh, read_point_cloud, write_point_cloud
from .registration import (IcpConfig, RegistrationResult, SeedPose, SweepReport,
                           crop_scene, icp_register, mls_smooth,
                           model_cloud_from_chain, rms_closest_point,
                           robustness_sweep, sample_mesh)
from .service import Session, run_clock

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
