from .Simulate import Simulator
