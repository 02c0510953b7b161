"""Foot-steered differential-drive locomotion stack.

Per-foot fore-aft plantar pressure drives two virtual wheels: the filter
chain turns raw four-channel frames into normalized wheel commands, the
differential-drive mapping turns those into body twist and turning radius,
and an exact-arc integrator advances the avatar pose.  A scenario harness
with scripted pilots, a live TCP/WebSocket session service, and a
walking-in-place baseline round out the stack.
"""

from .chain import (
    Baseline,
    ChainConfig,
    Deadzone,
    ForeAftSample,
    MinHold,
    NeutralWatchdog,
    NotCalibrated,
    SignalChain,
    Smoother,
    UserNotStill,
    WheelCommand,
    WindowTooShort,
    estimate_baseline,
    fore_aft,
)
from .config import ConfigError, Configs, apply_setting, load_configs
from .frames import (
    BadCrc,
    BadMagic,
    BadVersion,
    ChannelOutOfRange,
    EmptyScript,
    FrameError,
    NonMonotonicTimestamp,
    ParseError,
    PressureFrame,
    PressureScript,
    ScriptSegment,
    Truncated,
    crc16_ccitt_false,
    decode_frame,
    encode_frame,
    read_replay,
    synth_stream,
    write_replay,
)
from .harness import TrialResult, compare, run_trial, run_trial_traced
from .kinematics import (
    DriveParams,
    InvalidRegime,
    Pose,
    Radius,
    Twist,
    arc_tightening,
    command_radius,
    integrate,
    normalize_angle,
    turning_radius,
    twist_from_wheels,
    wheel_speeds,
)
from .paths import (
    ArcSeg,
    InvalidGeometry,
    LineSeg,
    PathCursor,
    ReferencePath,
    Scenario,
    make_arc_course,
    make_open_space,
    make_scenario,
    make_zigzag,
)
from .pilots import GipPilot, PilotConfig, WipPilot, make_pilot
from .session import ControlError, NotEnoughData, ProtocolError, Session, TelemetryRecord
from .techniques import (
    GipTechnique,
    StepResult,
    TechniqueEvent,
    WipConfig,
    WipTechnique,
    make_technique,
    wip_apply,
)

__version__ = "0.1.0"
