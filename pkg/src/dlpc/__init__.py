"""Simulated trapped-ion control stack comparing two kernel compilation modes.

``baseline`` recompiles and re-uploads the control kernel for every circuit;
``dlpc`` compiles a slot-parameterized kernel once and streams new parameter
values to the running kernel over RPC.  Everything above the device boundary
(transpile, pulse lowering, kernel codegen, host drivers) is real code; the
device itself is a statevector VM with a fitted wall-clock cost model.
"""

__version__ = "0.1.0"
