"""Bounded Pragmatic Listener: resource-bounded belief updating over news claims."""

__version__ = "0.1.0"
