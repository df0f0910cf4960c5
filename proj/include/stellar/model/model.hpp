// Copyright 2026-present the stellar project
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

#include <cmath>
#include <string>
#include <vector>

#include "stellar/core/graph.hpp"
#include "stellar/model/config.hpp"
#include "stellar/model/params.hpp"

namespace stellar::model {

// Encoder/decoder pair with r latent query tokens. The encoder emits sparse
// concept tokens (from the queries), the dense patch map, and the CLS
// vector; the localization head turns (dense, sparse) into a row-stochastic
// patch-over-concepts matrix; the decoder rebuilds pixels from the composed
// low-rank map.
template <typename T>
class StellarModel {
 public:
  StellarModel(EncoderConfig cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }

  struct EncodeOut {
    int sparse = -1;  // r x d
    int dense = -1;   // n_visible x d
    int cls = -1;     // 1 x d
  };

  // Full or masked encode of an image_size x image_size view. `visible`
  // holds ascending patch indices; empty means every patch. Masked-out
  // patches never enter the token sequence.
  EncodeOut encode(Binder<T>& b, const core::Tensor<T>& image,
                   const std::vector<int>& visible = {}) const;

  // Local crops ride on bilinearly resampled positional embeddings.
  EncodeOut encode_local(Binder<T>& b, const core::Tensor<T>& crop) const;

  // L = softmax(cossim(dense W1, sparse W2) / tau_spatial), rows over r.
  int localize(Binder<T>& b, int dense, int sparse) const;

  // composed (n x d) -> image in [0,1]; transformer stack + linear patch head.
  int decode(Binder<T>& b, int composed) const;

  // Two-layer MLP projector outputs (pre-normalization; the logits builder
  // normalizes onto the sphere).
  int project_sparse(Binder<T>& b, int tokens) const;
  int project_cls(Binder<T>& b, int cls) const;

  // Prototype banks, rows normalized onto the sphere.
  int sparse_prototypes_unit(Binder<T>& b) const;
  int cls_prototypes_unit(Binder<T>& b) const;

 private:
  void register_params();
  void init_params(std::uint64_t seed);
  int transformer(Binder<T>& b, int x, const std::string& prefix, int depth,
                  int width) const;
  EncodeOut encode_tokens(Binder<T>& b, int patch_tokens, int pos_ref) const;

  EncoderConfig cfg_;
  ParamStore<T> store_;
  core::Tensor<T> local_pos_interp_;  // n_local x n bilinear weights
};

// Bilinear grid resampling weights from a src x src grid to dst x dst,
// row-major over target cells.
core::TensorD bilinear_grid_weights(int src, int dst);

extern template class StellarModel<float>;
extern template class StellarModel<double>;

}  // namespace stellar::model
