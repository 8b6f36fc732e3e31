from .bprmf import BPRMF
