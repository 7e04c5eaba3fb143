// Copyright 2026 The synthvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "synthvae/dataset.hpp"
#include "synthvae/nn/checkpoint.hpp"
#include "synthvae/nn/config.hpp"

namespace synthvae::nn {

/// Receives one JSON object per logged step:
/// {stage, step, l_r, l_l, l_g, l_d, lr, ...}.
using MetricsSink = std::function<void(const nlohmann::json&)>;

/// Stage 1: L1 regression of the synthetic encoder onto the code-unit labels
/// of a rendered corpus, with equalizing noise on the inputs. Every image must
/// be labeled. The returned encoder is in inference mode.
Checkpoint train_synth_encoder(const Corpus& synth, const AttributeSchema& schema,
                               const TrainConfig& config, const MetricsSink& sink = {});

/// Stage 2: VAE-GAN hybrid on a real corpus. SYNTH needs `synth` (a stage-1
/// checkpoint) and keeps its encoder bit-identical; C needs labeled images;
/// UC ignores labels. The variant comes from `config`.
Checkpoint train_hybrid(const Corpus& real, const Checkpoint* synth, const AttributeSchema& schema,
                        const TrainConfig& config, const MetricsSink& sink = {});

/// Writes each record as one line to `path` (appending).
MetricsSink jsonl_sink(const std::string& path);

}  // namespace synthvae::nn
