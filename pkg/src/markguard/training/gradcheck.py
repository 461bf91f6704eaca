"""Finite-difference gradient verification for training losses.

Central differences in float64: perturb one parameter coordinate by +/-h,
re-evaluate the loss, and compare (f(p+h) - f(p-h)) / 2h against autograd.
"""

from __future__ import annotations

from typing import Callable

import torch
from torch import nn


def fd_gradient(
    loss_fn: Callable[[], torch.Tensor], param: torch.Tensor, index: int, step: float = 1e-5
) -> float:
    flat = param.data.view(-1)
    orig = flat[index].item()
    flat[index] = orig + step
    up = loss_fn().item()
    flat[index] = orig - step
    down = loss_fn().item()
    flat[index] = orig
    return (up - down) / (2.0 * step)


def max_relative_error(
    net: nn.Module,
    loss_fn: Callable[[], torch.Tensor],
    n_coords: int = 10,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between autograd and central differences over
    n_coords randomly chosen parameter coordinates."""
    net.zero_grad()
    loss_fn().backward()

    params = [p for p in net.parameters() if p.requires_grad]
    sizes = [p.numel() for p in params]
    total = sum(sizes)
    rng = torch.Generator().manual_seed(seed)
    picks = torch.randperm(total, generator=rng)[:n_coords].tolist()

    worst = 0.0
    with torch.no_grad():
        for flat_idx in picks:
            p_idx, offset = 0, flat_idx
            while offset >= sizes[p_idx]:
                offset -= sizes[p_idx]
                p_idx += 1
            analytic = params[p_idx].grad.view(-1)[offset].item()
            numeric = fd_gradient(loss_fn, params[p_idx], offset, step)
            scale = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / scale)
    return worst
