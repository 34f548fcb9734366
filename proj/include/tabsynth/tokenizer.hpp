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
#ifndef TABSYNTH_TOKENIZER_HPP_
#define TABSYNTH_TOKENIZER_HPP_

#include <string>
#include <utility>
#include <vector>

#include "tabsynth/rng.hpp"
#include "tabsynth/schema.hpp"
#include "tabsynth/tensor.hpp"

namespace tabsynth {

// Per-column detokenizer outputs for a batch: continuous columns produce a
// (B,1,1) scalar per row, discrete columns a (B,1,C) probability vector.
struct DetokenizedBatch {
  std::vector<ad::Tensor> per_token;
};

// Maps each encoded column into a shared d-dimensional token and back.
// Token order follows the encoded layout: continuous columns first, then
// discrete columns, both in schema order.
class FeatureTokenizer {
 public:
  FeatureTokenizer(std::vector<ColumnSchema> schema, std::size_t d, Rng& rng);

  std::size_t n_tokens() const { return layout_.size(); }
  std::size_t embed_dim() const { return d_; }
  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const std::vector<ColumnSpan>& layout() const { return layout_; }

  // rows: encoded values, (B, encoded_width). Returns (B, M, d).
  ad::Tensor tokenize(const Matrix& rows, std::size_t row_begin,
                      std::size_t row_count) const;
  ad::Tensor tokenize(const Matrix& rows) const;

  // e_hat: (B, M, d) reconstructed embeddings.
  DetokenizedBatch detokenize(const ad::Tensor& e_hat) const;

  // Squared error on continuous tokens plus cross-entropy on discrete
  // tokens, each averaged over the batch and summed over columns.
  ad::Tensor reconstruction_loss(const DetokenizedBatch& out,
                                 const Matrix& rows, std::size_t row_begin,
                                 std::size_t row_count) const;

  // Assembles detokenizer outputs into encoded-matrix form (probabilities in
  // the one-hot spans); decode_encoded turns that into a table.
  Matrix to_encoded(const DetokenizedBatch& out) const;

  std::vector<std::pair<std::string, ad::Tensor>> named_params() const;

 private:
  struct TokenParams {
    ad::Tensor w;      // continuous (1,d) / discrete (C,d)
    ad::Tensor b;      // (1,d)
    ad::Tensor w_hat;  // continuous (d,1) / discrete (d,C)
    ad::Tensor b_hat;  // continuous (1,1) / discrete (1,C)
  };

  std::vector<ColumnSchema> schema_;
  std::vector<ColumnSpan> layout_;
  std::size_t d_;
  std::vector<TokenParams> tokens_;
};

}  // namespace tabsynth

#endif  // TABSYNTH_TOKENIZER_HPP_
