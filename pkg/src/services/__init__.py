"""
Run-Output and Basis Services
"""

from .artifact_service import ArtifactService
from .basis_service import BasisService

__all__ = ["ArtifactService", "BasisService"]
