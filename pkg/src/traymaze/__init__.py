"""traymaze: a two-axis tilting-tray ball maze solved jointly by a
from-scratch SAC agent on one rotation axis and a partner (scripted or live
human) on the other.
"""

from .config import RunConfig, Schedule, default_config, load_config
from .env import EnvConfig, StepResult, TrayBallEnv
from .harness import TrialScore, evaluate, replay, score, train
from .layout import TrayLayout, Wall, default_layout, load_layout
from .nets import AdamState, GaussianHead, Mlp, adam_step, squash_sample
from .partner import DelayLine, PartnerSpec, make_partner, pd_command
from .physics import PhysConfig, PhysState, ball_acceleration, in_goal, step_physics
from .sac import ReplayBuffer, SacAgent, SacConfig, Transition

__version__ = "0.1.0"
