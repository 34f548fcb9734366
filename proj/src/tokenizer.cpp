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
#include "tabsynth/tokenizer.hpp"

#include <cmath>

namespace tabsynth {

using ad::Tensor;

namespace {

std::vector<double> uniform_init(Rng& rng, std::size_t n, double bound) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

}  // namespace

FeatureTokenizer::FeatureTokenizer(std::vector<ColumnSchema> schema,
                                   std::size_t d, Rng& rng)
    : schema_(std::move(schema)), layout_(build_layout(schema_)), d_(d) {
  if (d_ == 0)
    throw Error(ErrorCategory::validation, "embedding width must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_));
  for (const ColumnSpan& span : layout_) {
    const ColumnSchema& col = schema_[span.column];
    TokenParams p{Tensor(), Tensor(), Tensor(), Tensor()};
    if (col.discrete()) {
      std::size_t c = col.cardinality();
      p.w = Tensor::param({c, d_}, uniform_init(rng, c * d_, bound));
      p.b = Tensor::param({1, d_}, uniform_init(rng, d_, bound));
      p.w_hat = Tensor::param({d_, c}, uniform_init(rng, d_ * c, bound));
      p.b_hat = Tensor::param({1, c}, uniform_init(rng, c, bound));
    } else {
      p.w = Tensor::param({1, d_}, uniform_init(rng, d_, bound));
      p.b = Tensor::param({1, d_}, uniform_init(rng, d_, bound));
      p.w_hat = Tensor::param({d_, 1}, uniform_init(rng, d_, bound));
      p.b_hat = Tensor::param({1, 1}, uniform_init(rng, 1, bound));
    }
    tokens_.push_back(std::move(p));
  }
}

Tensor FeatureTokenizer::tokenize(const Matrix& rows, std::size_t row_begin,
                                  std::size_t row_count) const {
  if (rows.cols != encoded_width(schema_))
    throw Error(ErrorCategory::validation,
                "encoded width " + std::to_string(rows.cols) +
                    " does not match the tokenizer schema");
  if (row_begin + row_count > rows.rows)
    throw Error(ErrorCategory::validation, "row range out of bounds");
  const std::size_t b = row_count;
  std::vector<Tensor> embedded;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ColumnSpan& span = layout_[i];
    std::vector<double> vals(b * span.width);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t k = 0; k < span.width; ++k)
        vals[r * span.width + k] =
            rows.at(row_begin + r, span.offset + k);
    Tensor input = Tensor::constant({b, 1, span.width}, std::move(vals));
    Tensor e = ad::add(ad::matmul(input, tokens_[i].w), tokens_[i].b);
    embedded.push_back(e);
  }
  return ad::concat(embedded, 1);
}

Tensor FeatureTokenizer::tokenize(const Matrix& rows) const {
  return tokenize(rows, 0, rows.rows);
}

DetokenizedBatch FeatureTokenizer::detokenize(const Tensor& e_hat) const {
  const auto& shape = e_hat.shape();
  if (shape.size() != 3 || shape[1] != layout_.size() || shape[2] != d_)
    throw Error(ErrorCategory::validation,
                "detokenize expects (batch, " +
                    std::to_string(layout_.size()) + ", " +
                    std::to_string(d_) + ") embeddings");
  DetokenizedBatch out;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    Tensor token = ad::slice(e_hat, 1, i, 1);  // (B,1,d)
    Tensor y = ad::add(ad::matmul(token, tokens_[i].w_hat), tokens_[i].b_hat);
    if (schema_[layout_[i].column].discrete()) y = ad::softmax_rows(y);
    out.per_token.push_back(y);
  }
  return out;
}

Tensor FeatureTokenizer::reconstruction_loss(const DetokenizedBatch& out,
                                             const Matrix& rows,
                                             std::size_t row_begin,
                                             std::size_t row_count) const {
  if (out.per_token.size() != layout_.size())
    throw Error(ErrorCategory::validation,
                "detokenized batch does not match the tokenizer schema");
  const std::size_t b = row_count;
  const double inv_b = 1.0 / static_cast<double>(b);
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ColumnSpan& span = layout_[i];
    std::vector<double> vals(b * span.width);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t k = 0; k < span.width; ++k)
        vals[r * span.width + k] = rows.at(row_begin + r, span.offset + k);
    Tensor target = Tensor::constant({b, 1, span.width}, std::move(vals));
    if (schema_[span.column].discrete()) {
      // Picks the probability of the observed category; the epsilon guards
      // the log against an exactly-zero softmax output.
      Tensor ones = Tensor::constant({span.width, 1},
                                     std::vector<double>(span.width, 1.0));
      Tensor p_sel = ad::matmul(ad::mul(out.per_token[i], target), ones);
      Tensor ce = ad::scale(
          ad::log(ad::add(p_sel, Tensor::scalar(1e-12))), -1.0);
      total = ad::add(total, ad::mean(ce));
    } else {
      Tensor diff = ad::add(out.per_token[i], ad::scale(target, -1.0));
      total = ad::add(total, ad::scale(ad::sum_squares(diff), inv_b));
    }
  }
  return total;
}

Matrix FeatureTokenizer::to_encoded(const DetokenizedBatch& out) const {
  if (out.per_token.empty())
    throw Error(ErrorCategory::validation, "empty detokenized batch");
  const std::size_t b = out.per_token[0].shape()[0];
  Matrix m(b, encoded_width(schema_));
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ColumnSpan& span = layout_[i];
    auto vals = out.per_token[i].values();
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t k = 0; k < span.width; ++k)
        m.at(r, span.offset + k) = vals[r * span.width + k];
  }
  return m;
}

std::vector<std::pair<std::string, Tensor>> FeatureTokenizer::named_params()
    const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const std::string base = "tok." + schema_[layout_[i].column].name;
    out.emplace_back(base + ".w", tokens_[i].w);
    out.emplace_back(base + ".b", tokens_[i].b);
    out.emplace_back(base + ".w_hat", tokens_[i].w_hat);
    out.emplace_back(base + ".b_hat", tokens_[i].b_hat);
  }
  return out;
}

}  // namespace tabsynth
