"""Mixed finite elements with tangential-displacement / normal-normal-stress
continuity for linear piezoelasticity on curved prismatic and hexahedral
meshes."""

__version__ = "0.1.0"
