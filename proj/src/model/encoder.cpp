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

#include <algorithm>

#include "stellar/model/model.hpp"

namespace stellar::model {

using core::Shape;

core::TensorD bilinear_grid_weights(int src, int dst) {
  core::TensorD w = core::TensorD::zeros(Shape::of(dst * dst, src * src));
  for (int ty = 0; ty < dst; ++ty)
    for (int tx = 0; tx < dst; ++tx) {
      const double sy = (ty + 0.5) * src / dst - 0.5;
      const double sx = (tx + 0.5) * src / dst - 0.5;
      const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, src - 1);
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, src - 1);
      const int y1 = std::min(y0 + 1, src - 1);
      const int x1 = std::min(x0 + 1, src - 1);
      const double fy = std::clamp(sy - y0, 0.0, 1.0);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      const int row = ty * dst + tx;
      w.at(row, y0 * src + x0) += (1 - fy) * (1 - fx);
      w.at(row, y0 * src + x1) += (1 - fy) * fx;
      w.at(row, y1 * src + x0) += fy * (1 - fx);
      w.at(row, y1 * src + x1) += fy * fx;
    }
  return w;
}

template <typename T>
StellarModel<T>::StellarModel(EncoderConfig cfg, std::uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  register_params();
  init_params(seed);
  local_pos_interp_ =
      bilinear_grid_weights(cfg_.patches_per_side(),
                            cfg_.local_patches_per_side())
          .template cast<T>();
}

namespace {

void register_block(ParamStore<float>&, const std::string&, int, int);

template <typename U>
void register_block_t(ParamStore<U>& s, const std::string& p, int width,
                      int mlp) {
  s.add(p + ".ln1.g", Shape::of(width), false);
  s.add(p + ".ln1.b", Shape::of(width), false);
  s.add(p + ".qkv_w", Shape::of(width, 3 * width), true);
  s.add(p + ".qkv_b", Shape::of(3 * width), false);
  s.add(p + ".proj_w", Shape::of(width, width), true);
  s.add(p + ".proj_b", Shape::of(width), false);
  s.add(p + ".ln2.g", Shape::of(width), false);
  s.add(p + ".ln2.b", Shape::of(width), false);
  s.add(p + ".mlp1_w", Shape::of(width, mlp), true);
  s.add(p + ".mlp1_b", Shape::of(mlp), false);
  s.add(p + ".mlp2_w", Shape::of(mlp, width), true);
  s.add(p + ".mlp2_b", Shape::of(width), false);
}

}  // namespace

template <typename T>
void StellarModel<T>::register_params() {
  const int d = cfg_.width;
  const int n = cfg_.num_patches();
  const int pd = cfg_.patch_dim();
  const int p = cfg_.projector_dim;
  const int w = cfg_.decoder_width;

  store_.add("enc.patch_w", Shape::of(pd, d), true);
  store_.add("enc.patch_b", Shape::of(d), false);
  store_.add("enc.pos", Shape::of(n, d), false);
  store_.add("enc.cls", Shape::of(1, d), false);
  store_.add("enc.queries", Shape::of(cfg_.r, d), false);
  for (int i = 0; i < cfg_.depth; ++i)
    register_block_t(store_, "enc.blk" + std::to_string(i), d, 4 * d);
  store_.add("enc.ln.g", Shape::of(d), false);
  store_.add("enc.ln.b", Shape::of(d), false);

  store_.add("loc.w1", Shape::of(d, d), true);
  store_.add("loc.w2", Shape::of(d, d), true);

  for (const char* head : {"proj.sparse", "proj.cls"}) {
    store_.add(std::string(head) + ".w1", Shape::of(d, d), true);
    store_.add(std::string(head) + ".b1", Shape::of(d), false);
    store_.add(std::string(head) + ".w2", Shape::of(d, p), true);
    store_.add(std::string(head) + ".b2", Shape::of(p), false);
  }
  store_.add("proto.sparse", Shape::of(cfg_.k_sparse, p), true);
  store_.add("proto.cls", Shape::of(cfg_.k_cls, p), true);

  store_.add("dec.embed_w", Shape::of(d, w), true);
  store_.add("dec.embed_b", Shape::of(w), false);
  store_.add("dec.pos", Shape::of(n, w), false);
  for (int i = 0; i < cfg_.decoder_depth; ++i)
    register_block_t(store_, "dec.blk" + std::to_string(i), w, 4 * w);
  store_.add("dec.ln.g", Shape::of(w), false);
  store_.add("dec.ln.b", Shape::of(w), false);
  store_.add("dec.head_w", Shape::of(w, pd), true);
  store_.add("dec.head_b", Shape::of(pd), false);
}

template <typename T>
void StellarModel<T>::init_params(std::uint64_t seed) {
  for (int s = 0; s < store_.size(); ++s) {
    auto& e = store_.entry(s);
    core::RngStream rng(seed, core::fnv1a(e.name.c_str()));
    const std::string& n = e.name;
    const bool is_gain = n.size() > 5 && n.substr(n.size() - 5) == ".ln.g";
    const bool is_ln_gain = is_gain || n.find(".ln1.g") != std::string::npos ||
                            n.find(".ln2.g") != std::string::npos;
    const bool is_bias = n.size() > 2 && (n.substr(n.size() - 2) == "_b" ||
                                          n.substr(n.size() - 2) == ".b") &&
                         !is_ln_gain;
    const bool is_proto = n.rfind("proto.", 0) == 0;
    T* ptr = e.value.data();
    if (is_ln_gain) {
      for (std::int64_t i = 0; i < e.value.size(); ++i) ptr[i] = T(1);
    } else if (is_bias || n.find(".ln1.b") != std::string::npos ||
               n.find(".ln2.b") != std::string::npos ||
               n.find(".ln.b") != std::string::npos) {
      // zeros
    } else if (is_proto) {
      for (std::int64_t i = 0; i < e.value.size(); ++i)
        ptr[i] = static_cast<T>(rng.normal());
    } else {
      for (std::int64_t i = 0; i < e.value.size(); ++i)
        ptr[i] = static_cast<T>(rng.normal(0.0, 0.02));
    }
  }
}

// Pre-norm transformer stack over a token sequence ref.
template <typename T>
int StellarModel<T>::transformer(Binder<T>& b, int x, const std::string& prefix,
                                 int depth, int width) const {
  core::Graph<T>& g = b.graph();
  const int heads = cfg_.heads;
  const int dh = width / heads;
  const T attn_temp = static_cast<T>(std::sqrt(static_cast<double>(dh)));
  for (int blk = 0; blk < depth; ++blk) {
    const std::string p = prefix + ".blk" + std::to_string(blk);
    int h = g.layer_norm(x, b(p + ".ln1.g"), b(p + ".ln1.b"));
    int qkv = g.add_rowvec(g.matmul(h, b(p + ".qkv_w")), b(p + ".qkv_b"));
    int q = g.slice_cols(qkv, 0, width);
    int k = g.slice_cols(qkv, width, width);
    int v = g.slice_cols(qkv, 2 * width, width);
    std::vector<int> head_out;
    head_out.reserve(heads);
    for (int hd = 0; hd < heads; ++hd) {
      int qh = g.slice_cols(q, hd * dh, dh);
      int kh = g.slice_cols(k, hd * dh, dh);
      int vh = g.slice_cols(v, hd * dh, dh);
      int probs = g.softmax_rows(g.matmul_nt(qh, kh), attn_temp);
      head_out.push_back(g.matmul(probs, vh));
    }
    int attn = g.add_rowvec(
        g.matmul(g.concat_cols(head_out), b(p + ".proj_w")), b(p + ".proj_b"));
    x = g.add(x, attn);
    int h2 = g.layer_norm(x, b(p + ".ln2.g"), b(p + ".ln2.b"));
    int mlp = g.add_rowvec(
        g.matmul(g.gelu(g.add_rowvec(g.matmul(h2, b(p + ".mlp1_w")),
                                     b(p + ".mlp1_b"))),
                 b(p + ".mlp2_w")),
        b(p + ".mlp2_b"));
    x = g.add(x, mlp);
  }
  return x;
}

template <typename T>
typename StellarModel<T>::EncodeOut StellarModel<T>::encode_tokens(
    Binder<T>& b, int patch_tokens, int pos_ref) const {
  core::Graph<T>& g = b.graph();
  int tok = g.add_rowvec(g.matmul(patch_tokens, b("enc.patch_w")),
                         b("enc.patch_b"));
  tok = g.add(tok, pos_ref);
  int seq = g.concat_rows({b("enc.cls"), b("enc.queries"), tok});
  seq = transformer(b, seq, "enc", cfg_.depth, cfg_.width);
  seq = g.layer_norm(seq, b("enc.ln.g"), b("enc.ln.b"));
  EncodeOut out;
  out.cls = g.slice_rows(seq, 0, 1);
  out.sparse = g.slice_rows(seq, 1, cfg_.r);
  const int n_vis = g.value(patch_tokens).rows();
  out.dense = g.slice_rows(seq, 1 + cfg_.r, n_vis);
  return out;
}

template <typename T>
typename StellarModel<T>::EncodeOut StellarModel<T>::encode(
    Binder<T>& b, const core::Tensor<T>& image,
    const std::vector<int>& visible) const {
  core::Graph<T>& g = b.graph();
  const int s = cfg_.image_size;
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != s ||
      image.dim(2) != s)
    throw std::invalid_argument("encode: expected a 3x" + std::to_string(s) +
                                "x" + std::to_string(s) + " image");
  const int n = cfg_.num_patches();
  int patches = g.patchify(g.constant(image), cfg_.patch_size);
  int pos = b("enc.pos");
  if (!visible.empty()) {
    for (std::size_t i = 0; i < visible.size(); ++i)
      if (visible[i] < 0 || visible[i] >= n ||
          (i > 0 && visible[i] <= visible[i - 1]))
        throw std::invalid_argument("encode: visible indices must be "
                                    "ascending and in range");
    patches = g.gather_rows(patches, visible);
    pos = g.gather_rows(pos, visible);
  }
  return encode_tokens(b, patches, pos);
}

template <typename T>
typename StellarModel<T>::EncodeOut StellarModel<T>::encode_local(
    Binder<T>& b, const core::Tensor<T>& crop) const {
  core::Graph<T>& g = b.graph();
  const int s = cfg_.local_size;
  if (crop.rank() != 3 || crop.dim(0) != 3 || crop.dim(1) != s ||
      crop.dim(2) != s)
    throw std::invalid_argument("encode_local: expected a 3x" +
                                std::to_string(s) + "x" + std::to_string(s) +
                                " crop");
  int patches = g.patchify(g.constant(crop), cfg_.patch_size);
  int pos = g.matmul(g.constant(local_pos_interp_), b("enc.pos"));
  return encode_tokens(b, patches, pos);
}

template <typename T>
int StellarModel<T>::localize(Binder<T>& b, int dense, int sparse) const {
  core::Graph<T>& g = b.graph();
  int u = g.l2_normalize_rows(g.matmul(dense, b("loc.w1")), T(1e-8));
  int s = g.l2_normalize_rows(g.matmul(sparse, b("loc.w2")), T(1e-8));
  return g.softmax_rows(g.matmul_nt(u, s), static_cast<T>(cfg_.tau_spatial));
}

template <typename T>
int StellarModel<T>::decode(Binder<T>& b, int composed) const {
  core::Graph<T>& g = b.graph();
  if (g.value(composed).rows() != cfg_.num_patches())
    throw std::invalid_argument("decode: composed must cover every patch");
  int tok = g.add_rowvec(g.matmul(composed, b("dec.embed_w")),
                         b("dec.embed_b"));
  tok = g.add(tok, b("dec.pos"));
  tok = transformer(b, tok, "dec", cfg_.decoder_depth, cfg_.decoder_width);
  tok = g.layer_norm(tok, b("dec.ln.g"), b("dec.ln.b"));
  int pix = g.add_rowvec(g.matmul(tok, b("dec.head_w")), b("dec.head_b"));
  int img = g.unpatchify(pix, 3, cfg_.image_size, cfg_.image_size,
                         cfg_.patch_size);
  return g.clamp01(img);
}

template <typename T>
int StellarModel<T>::project_sparse(Binder<T>& b, int tokens) const {
  core::Graph<T>& g = b.graph();
  int h = g.gelu(g.add_rowvec(g.matmul(tokens, b("proj.sparse.w1")),
                              b("proj.sparse.b1")));
  return g.add_rowvec(g.matmul(h, b("proj.sparse.w2")), b("proj.sparse.b2"));
}

template <typename T>
int StellarModel<T>::project_cls(Binder<T>& b, int cls) const {
  core::Graph<T>& g = b.graph();
  int h = g.gelu(
      g.add_rowvec(g.matmul(cls, b("proj.cls.w1")), b("proj.cls.b1")));
  return g.add_rowvec(g.matmul(h, b("proj.cls.w2")), b("proj.cls.b2"));
}

template <typename T>
int StellarModel<T>::sparse_prototypes_unit(Binder<T>& b) const {
  return b.graph().l2_normalize_rows(b("proto.sparse"), T(1e-8));
}

template <typename T>
int StellarModel<T>::cls_prototypes_unit(Binder<T>& b) const {
  return b.graph().l2_normalize_rows(b("proto.cls"), T(1e-8));
}

template class StellarModel<float>;
template class StellarModel<double>;

}  // namespace stellar::model
