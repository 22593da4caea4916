import torch

from rethinknet.common.errors import NonFiniteError


def make_generator(seed: int) -> torch.Generator:
    """CPU generator owned by one model or run; never touches global RNG state."""
    generator = torch.Generator(device='cpu')
    generator.manual_seed(int(seed))
    return generator


def require_finite(x: torch.Tensor, what: str) -> torch.Tensor:
    if not bool(torch.isfinite(x).all()):
        raise NonFiniteError(f"{what} contains NaN or Inf")
    return x
