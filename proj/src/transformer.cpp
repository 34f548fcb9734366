/*
 * Copyright 2026 The tabsynth authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tabsynth/transformer.hpp"

#include <cmath>

#include "tabsynth/util.hpp"

namespace tabsynth {

using ad::Tensor;

namespace {

Tensor linear_init(Rng& rng, std::size_t rows, std::size_t cols,
                   double bound) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::param({rows, cols}, std::move(v));
}

}  // namespace

TransformerBlock::TransformerBlock(std::size_t d, std::size_t heads,
                                   std::size_t ffn_width, Rng& rng)
    : d_(d), heads_(heads) {
  if (heads == 0 || d % heads != 0)
    throw Error(ErrorCategory::validation,
                "embedding width " + std::to_string(d) +
                    " is not divisible by " + std::to_string(heads) +
                    " heads");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  ln1_g_ = Tensor::param({d}, std::vector<double>(d, 1.0));
  ln1_b_ = Tensor::param({d}, std::vector<double>(d, 0.0));
  wq_ = linear_init(rng, d, d, bound);
  bq_ = linear_init(rng, 1, d, bound);
  wk_ = linear_init(rng, d, d, bound);
  bk_ = linear_init(rng, 1, d, bound);
  wv_ = linear_init(rng, d, d, bound);
  bv_ = linear_init(rng, 1, d, bound);
  wo_ = linear_init(rng, d, d, bound);
  bo_ = linear_init(rng, 1, d, bound);
  ln2_g_ = Tensor::param({d}, std::vector<double>(d, 1.0));
  ln2_b_ = Tensor::param({d}, std::vector<double>(d, 0.0));
  w1_ = linear_init(rng, d, ffn_width, bound);
  b1_ = linear_init(rng, 1, ffn_width, bound);
  w2_ = linear_init(rng, ffn_width, d,
                    1.0 / std::sqrt(static_cast<double>(ffn_width)));
  b2_ = linear_init(rng, 1, d, bound);
}

Tensor TransformerBlock::forward(const Tensor& x) const {
  const auto& shape = x.shape();
  if (shape.size() != 3 || shape[2] != d_)
    throw Error(ErrorCategory::validation,
                "transformer block expects (batch, tokens, " +
                    std::to_string(d_) + ") input");
  if (capture_attention_) last_attention_.clear();

  Tensor h = ad::add(ad::mul(ad::layer_norm(x), ln1_g_), ln1_b_);
  Tensor q = ad::add(ad::matmul(h, wq_), bq_);
  Tensor k = ad::add(ad::matmul(h, wk_), bk_);
  Tensor v = ad::add(ad::matmul(h, wv_), bv_);

  const std::size_t dh = d_ / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> head_outputs;
  for (std::size_t i = 0; i < heads_; ++i) {
    Tensor qh = ad::slice(q, 2, i * dh, dh);
    Tensor kh = ad::slice(k, 2, i * dh, dh);
    Tensor vh = ad::slice(v, 2, i * dh, dh);
    Tensor scores = ad::scale(ad::matmul(qh, kh, false, true), inv_sqrt);
    Tensor attn = ad::softmax_rows(scores);
    if (capture_attention_) last_attention_.push_back(attn);
    head_outputs.push_back(ad::matmul(attn, vh));
  }
  Tensor merged = ad::concat(head_outputs, 2);
  Tensor attended = ad::add(x, ad::add(ad::matmul(merged, wo_), bo_));

  Tensor h2 = ad::add(ad::mul(ad::layer_norm(attended), ln2_g_), ln2_b_);
  Tensor f = ad::relu(ad::add(ad::matmul(h2, w1_), b1_));
  Tensor out = ad::add(ad::matmul(f, w2_), b2_);
  return ad::add(attended, out);
}

void TransformerBlock::collect_params(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor>>* out) const {
  out->emplace_back(prefix + ".ln1.g", ln1_g_);
  out->emplace_back(prefix + ".ln1.b", ln1_b_);
  out->emplace_back(prefix + ".attn.wq", wq_);
  out->emplace_back(prefix + ".attn.bq", bq_);
  out->emplace_back(prefix + ".attn.wk", wk_);
  out->emplace_back(prefix + ".attn.bk", bk_);
  out->emplace_back(prefix + ".attn.wv", wv_);
  out->emplace_back(prefix + ".attn.bv", bv_);
  out->emplace_back(prefix + ".attn.wo", wo_);
  out->emplace_back(prefix + ".attn.bo", bo_);
  out->emplace_back(prefix + ".ln2.g", ln2_g_);
  out->emplace_back(prefix + ".ln2.b", ln2_b_);
  out->emplace_back(prefix + ".ffn.w1", w1_);
  out->emplace_back(prefix + ".ffn.b1", b1_);
  out->emplace_back(prefix + ".ffn.w2", w2_);
  out->emplace_back(prefix + ".ffn.b2", b2_);
}

}  // namespace tabsynth
