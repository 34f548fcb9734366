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
#ifndef TABSYNTH_TRANSFORMER_HPP_
#define TABSYNTH_TRANSFORMER_HPP_

#include <string>
#include <utility>
#include <vector>

#include "tabsynth/rng.hpp"
#include "tabsynth/tensor.hpp"

namespace tabsynth {

// Pre-norm transformer block over (batch, tokens, d) inputs: multi-head
// self-attention across the token axis, then a two-layer ReLU feed-forward,
// each behind a residual connection.
class TransformerBlock {
 public:
  TransformerBlock(std::size_t d, std::size_t heads, std::size_t ffn_width,
                   Rng& rng);

  ad::Tensor forward(const ad::Tensor& x) const;

  void collect_params(
      const std::string& prefix,
      std::vector<std::pair<std::string, ad::Tensor>>* out) const;

  // When enabled, forward() stores the per-head attention matrices of the
  // most recent call for inspection. Off by default so a trained block stays
  // read-only in concurrent use.
  void set_capture_attention(bool on) { capture_attention_ = on; }
  const std::vector<ad::Tensor>& last_attention() const {
    return last_attention_;
  }

 private:
  std::size_t d_;
  std::size_t heads_;
  ad::Tensor ln1_g_, ln1_b_, wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
  ad::Tensor ln2_g_, ln2_b_, w1_, b1_, w2_, b2_;
  bool capture_attention_ = false;
  mutable std::vector<ad::Tensor> last_attention_;
};

}  // namespace tabsynth

#endif  // TABSYNTH_TRANSFORMER_HPP_
