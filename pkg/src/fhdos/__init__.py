"""O-RAN fronthaul C/U-Plane DoS test toolkit with a desk-scale victim simulator."""

from .attacks import AttackSpec, Target
from .codec import CPlaneMessage, EthFrame, FrameClass, MacAddress, UPlaneMessage, classify
from .pcapio import build_attack_pcap, read_pcap, synthesize_template, write_pcap
from .tx import RateSchedule, run_attack

__version__ = "0.1.0"

__all__ = [
    "AttackSpec", "Target", "CPlaneMessage", "EthFrame", "FrameClass", "MacAddress", "UPlaneMessage",
    "classify", "build_attack_pcap", "read_pcap", "synthesize_template", "write_pcap", "RateSchedule",
    "run_attack",
]
