# Copyright 2026 The synthvae Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Synthetic-supervised disentangled VAE-GAN.

Thin layer over the C++ core: procedural renderer, attribute sampling, losses,
disentanglement metrics, trained-model inference and the pipeline CLI.
Images are float32 arrays in [-1, 1], shaped HxWxC or NxHxWxC.
"""

import torch  # noqa: F401  loads libtorch before the extension

from ._core import (
    ConfigError,
    IoError,
    Model,
    RangeError,
    SchemaError,
    ShapeError,
    code_std,
    discriminator_loss,
    generator_loss,
    latent_loss,
    pair_delta,
    recon_loss,
    render,
    renderer_version,
    run_cli,
    sample_attributes,
    schema,
    sequence_correlation,
    to_code,
)

__all__ = [
    "ConfigError",
    "IoError",
    "Model",
    "RangeError",
    "SchemaError",
    "ShapeError",
    "code_std",
    "discriminator_loss",
    "generator_loss",
    "latent_loss",
    "pair_delta",
    "recon_loss",
    "render",
    "renderer_version",
    "run_cli",
    "sample_attributes",
    "schema",
    "sequence_correlation",
    "to_code",
]
