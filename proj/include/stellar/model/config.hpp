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

#include <stdexcept>

namespace stellar::model {

// Desk-scale defaults; r and the decoder depth follow the reference design.
struct EncoderConfig {
  int image_size = 32;
  int patch_size = 4;
  int width = 128;        // d
  int depth = 6;
  int heads = 4;
  int r = 16;             // latent queries / sparse tokens
  int projector_dim = 64; // p
  int k_sparse = 256;     // prototypes for sparse tokens
  int k_cls = 256;        // prototypes for the CLS token
  double tau_spatial = 0.06;

  int decoder_width = 64;
  int decoder_depth = 6;
  int local_size = 16;    // side of local crops fed to the CLS path

  int patches_per_side() const { return image_size / patch_size; }
  int num_patches() const { return patches_per_side() * patches_per_side(); }
  int local_patches_per_side() const { return local_size / patch_size; }
  int num_local_patches() const {
    return local_patches_per_side() * local_patches_per_side();
  }
  int patch_dim() const { return 3 * patch_size * patch_size; }

  void validate() const {
    if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
      throw std::invalid_argument("config: image_size must be a positive "
                                  "multiple of patch_size");
    if (local_size <= 0 || local_size % patch_size != 0 ||
        local_size > image_size)
      throw std::invalid_argument("config: local_size must divide into "
                                  "patches and fit the image");
    if (r < 1) throw std::invalid_argument("config: r must be >= 1");
    if (tau_spatial <= 0.0)
      throw std::invalid_argument("config: tau_spatial must be > 0");
    if (width <= 0 || depth <= 0 || heads <= 0 || width % heads != 0)
      throw std::invalid_argument("config: width must be divisible by heads");
    if (decoder_width <= 0 || decoder_depth <= 0 ||
        decoder_width % heads != 0)
      throw std::invalid_argument("config: bad decoder dimensions");
    if (projector_dim <= 0 || k_sparse <= 0 || k_cls <= 0)
      throw std::invalid_argument("config: bad projector/prototype sizes");
  }
};

}  // namespace stellar::model
