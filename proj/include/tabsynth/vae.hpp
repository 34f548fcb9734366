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
#ifndef TABSYNTH_VAE_HPP_
#define TABSYNTH_VAE_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tabsynth/checkpoint.hpp"
#include "tabsynth/schema.hpp"
#include "tabsynth/tokenizer.hpp"
#include "tabsynth/transformer.hpp"

namespace tabsynth {

struct VaeConfig {
  std::size_t d = 8;
  std::size_t heads = 2;
  std::size_t ffn_mult = 4;  // feed-forward width = ffn_mult * d
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  // KL weight schedule: start value, halved after `beta_patience` epochs
  // without reconstruction improvement, never below the floor. A positive
  // fixed_beta disables the schedule.
  double beta_start = 1e-2;
  double beta_floor = 1e-5;
  std::size_t beta_patience = 5;
  double fixed_beta = 0.0;

  void validate() const;
};

struct VaeEpochLog {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double beta = 0.0;
};

struct VaeLossParts {
  ad::Tensor total;
  ad::Tensor recon;
  ad::Tensor kl;
};

// KL(N(mu, sigma^2) || N(0, 1)) summed over latent entries, averaged over
// the leading batch axis. Zero exactly when mu = 0 and logvar = 0.
ad::Tensor gaussian_kl(const ad::Tensor& mu, const ad::Tensor& logvar);

// Reconstruction + beta-weighted KL over a batch of encoded rows. Losses
// are averaged over the batch and summed over columns / latent entries.
VaeLossParts vae_loss(const FeatureTokenizer& tokenizer,
                      const DetokenizedBatch& reconstruction,
                      const Matrix& rows, std::size_t row_begin,
                      std::size_t row_count, const ad::Tensor& mu,
                      const ad::Tensor& logvar, double beta);

// Transformer autoencoder over column tokens with Gaussian latent heads.
// Encoder and decoder are both exactly two blocks.
class VaeModel {
 public:
  VaeModel(std::vector<ColumnSchema> schema, std::string target_column,
           VaeConfig config, std::uint64_t init_seed);

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const std::string& target_column() const { return target_column_; }
  const VaeConfig& config() const { return config_; }
  const FeatureTokenizer& tokenizer() const { return *tokenizer_; }
  std::size_t n_tokens() const { return tokenizer_->n_tokens(); }
  std::size_t latent_width() const;  // n_tokens * d

  // (mu, logvar), each (B, M, d).
  std::pair<ad::Tensor, ad::Tensor> encode_batch(const Matrix& rows,
                                                 std::size_t row_begin,
                                                 std::size_t row_count) const;
  static ad::Tensor sigma_from_logvar(const ad::Tensor& logvar);
  // Z = mu + sigma * eps with eps drawn from rng; gradient reaches mu and
  // sigma only.
  static ad::Tensor reparameterize(const ad::Tensor& mu,
                                   const ad::Tensor& sigma, Rng& rng);
  ad::Tensor decode(const ad::Tensor& z) const;

  // Encodes a table with this model's fitted schema and returns per-row
  // posterior means, flattened to (rows, M*d).
  Matrix extract_latents(const Table& table) const;
  // Runs flattened latent rows through decoder + detokenizer and returns
  // the decoded table.
  Table decode_latents(const Matrix& flat_latents) const;

  // Re-encodes a table with the model's fitted standardization.
  Matrix encode_rows(const Table& table) const;

  std::vector<std::pair<std::string, ad::Tensor>> named_params() const;

  void set_capture_attention(bool on);
  std::vector<ad::Tensor> all_attention() const;

  Checkpoint to_checkpoint() const;
  static VaeModel from_checkpoint(const Checkpoint& ckpt);

 private:
  std::vector<ColumnSchema> schema_;
  std::string target_column_;
  VaeConfig config_;
  std::unique_ptr<FeatureTokenizer> tokenizer_;
  std::vector<TransformerBlock> encoder_;
  std::vector<TransformerBlock> decoder_;
  ad::Tensor mu_w_, mu_b_, lv_w_, lv_b_;
};

// Fits the standardization on `table` when not already fitted, then trains.
// Throws Error(training) naming the epoch if the loss leaves the finite
// range. The log gets one entry per epoch.
VaeModel train_vae(const Table& table, const VaeConfig& config,
                   std::uint64_t seed, std::vector<VaeEpochLog>* log = nullptr);

void save_vae(const VaeModel& model, const std::string& path);
VaeModel load_vae(const std::string& path,
                  std::uint64_t expected_fingerprint = 0);

}  // namespace tabsynth

#endif  // TABSYNTH_VAE_HPP_
