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
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tabsynth/checkpoint.hpp"
#include "tabsynth/rng.hpp"
#include "tabsynth/tensor.hpp"
#include "tabsynth/util.hpp"

namespace tabsynth {

// Score-based generator over flat latent vectors. Forward corruption is
// variance-exploding with the identity schedule sigma(t) = t; the denoiser
// is a five-layer MLP conditioned on the noise level through a sinusoidal
// embedding of ln(sigma) that is added to the first hidden activation.
struct DiffusionConfig {
  std::size_t hidden = 128;     // first/last hidden width; middle layers use 2x
  std::size_t time_pairs = 64;  // sin/cos frequency pairs of ln(sigma)
  double sigma_min = 0.002;
  double sigma_max = 20.0;
  double lr = 1e-3;
  std::size_t epochs = 500;
  std::size_t batch_size = 256;
  std::size_t sample_steps = 50;

  void validate() const;
};

struct DiffusionEpochLog {
  double loss = 0.0;
};

// Batch denoiser: one noise level per row of z_t, returns predicted noise of
// the same shape. Lets tests substitute closed-form oracles for the MLP.
using DenoiseFn =
    std::function<Matrix(const Matrix& z_t, const std::vector<double>& sigma)>;

class DiffusionModel {
 public:
  DiffusionModel(std::size_t latent_dim, const DiffusionConfig& config,
                 std::uint64_t seed);

  std::size_t latent_dim() const { return latent_dim_; }
  const DiffusionConfig& config() const { return config_; }
  // Fingerprint of whatever produced the training latents (the paired
  // encoder checkpoint); 0 when trained on raw matrices.
  std::uint64_t source_fingerprint() const { return source_fingerprint_; }

  // Per-coordinate affine map fitted on the training latents. The model
  // always trains and samples in standardized space; callers see latent
  // space. Coordinates with (near) zero spread keep scale 1.
  void fit_latent_scaling(const Matrix& latents);
  Matrix to_model_space(const Matrix& latents) const;
  Matrix to_latent_space(const Matrix& standardized) const;

  // Denoiser forward pass as an autodiff graph; z_t is (B, latent_dim) and
  // sigma holds one noise level per row.
  ad::Tensor denoise_graph(const ad::Tensor& z_t,
                           const std::vector<double>& sigma) const;
  // Value-only wrapper over the same stack.
  Matrix denoise(const Matrix& z_t, const std::vector<double>& sigma) const;

  // One minibatch of the denoising objective: draw per-row noise levels
  // (ln sigma uniform) then per-entry Gaussian noise, and return the mean
  // over rows of the squared prediction error. Draw order matches
  // denoising_loss_value so the two routes can be cross-checked.
  ad::Tensor training_loss(const Matrix& z0, Rng& rng) const;

  // Reverse-time samples in latent space (de-standardized). steps = 0 uses
  // the configured default.
  Matrix sample(std::size_t n, std::uint64_t seed, std::size_t steps = 0,
                bool probability_flow = false) const;

  std::vector<std::pair<std::string, ad::Tensor>> named_params() const;

  Checkpoint to_checkpoint() const;
  static DiffusionModel from_checkpoint(const Checkpoint& ckpt);

  void set_source_fingerprint(std::uint64_t fp) { source_fingerprint_ = fp; }

 private:
  struct Layer {
    ad::Tensor w;
    ad::Tensor b;
  };
  Layer make_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng);

  std::size_t latent_dim_;
  DiffusionConfig config_;
  std::uint64_t source_fingerprint_ = 0;
  std::vector<double> latent_mean_;
  std::vector<double> latent_std_;
  Layer fc_in_, temb_, fc1_, fc2_, fc3_, fc_out_;
};

// z_t = z0 + sigma * eps with eps ~ N(0, I), one draw per entry (row-major).
Matrix perturb(const Matrix& z0, double sigma, Rng& rng);

// Mean over rows of |fn(z_t) - eps|^2 with per-row ln sigma uniform in
// [ln sigma_min, ln sigma_max]. Value-only twin of
// DiffusionModel::training_loss for oracle denoisers.
double denoising_loss_value(const DenoiseFn& fn, const Matrix& z0,
                            double sigma_min, double sigma_max, Rng& rng);

// Euler-Maruyama integration of the reverse dynamics from sigma_max down to
// sigma_min over a geometric grid, starting at z ~ N(0, sigma_max^2 I).
// The score is taken as -fn(z, sigma)/sigma. probability_flow drops the
// noise term and halves the drift, giving a deterministic map.
Matrix sample_from_denoiser(const DenoiseFn& fn, std::size_t latent_dim,
                            std::size_t n, std::size_t steps, double sigma_min,
                            double sigma_max, std::uint64_t seed,
                            bool probability_flow = false);

// Standardizes the latents, trains the denoiser with Adam, logs per-epoch
// mean loss. Throws on a non-finite loss, naming the optimizer step.
DiffusionModel train_diffusion(const Matrix& latents,
                               const DiffusionConfig& config,
                               std::uint64_t seed,
                               std::vector<DiffusionEpochLog>* log = nullptr,
                               std::uint64_t source_fingerprint = 0);

void save_diffusion(const DiffusionModel& model, const std::string& path);
DiffusionModel load_diffusion(const std::string& path,
                              std::uint64_t expected_fingerprint = 0);

}  // namespace tabsynth
