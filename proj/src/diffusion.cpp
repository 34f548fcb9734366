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
#include "tabsynth/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace tabsynth {

using ad::Tensor;

void DiffusionConfig::validate() const {
  if (hidden == 0 || time_pairs == 0)
    throw Error(ErrorCategory::config, "denoiser widths must be positive");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
    throw Error(ErrorCategory::config,
                "noise range requires 0 < sigma_min < sigma_max");
  if (lr <= 0.0 || epochs == 0 || batch_size == 0 || sample_steps == 0)
    throw Error(ErrorCategory::config,
                "lr, epochs, batch_size and sample_steps must be positive");
}

DiffusionModel::Layer DiffusionModel::make_layer(std::size_t fan_in,
                                                 std::size_t fan_out,
                                                 Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> w(fan_in * fan_out);
  for (double& v : w) v = rng.uniform(-bound, bound);
  return Layer{Tensor::param({fan_in, fan_out}, std::move(w)),
               Tensor::zeros({1, fan_out}, /*requires_grad=*/true)};
}

DiffusionModel::DiffusionModel(std::size_t latent_dim,
                               const DiffusionConfig& config,
                               std::uint64_t seed)
    : latent_dim_(latent_dim), config_(config) {
  config_.validate();
  if (latent_dim_ == 0)
    throw Error(ErrorCategory::config, "latent_dim must be positive");
  Rng rng(seed);
  const std::size_t h = config_.hidden;
  fc_in_ = make_layer(latent_dim_, h, rng);
  temb_ = make_layer(2 * config_.time_pairs, h, rng);
  fc1_ = make_layer(h, 2 * h, rng);
  fc2_ = make_layer(2 * h, 2 * h, rng);
  fc3_ = make_layer(2 * h, h, rng);
  fc_out_ = make_layer(h, latent_dim_, rng);
  latent_mean_.assign(latent_dim_, 0.0);
  latent_std_.assign(latent_dim_, 1.0);
}

void DiffusionModel::fit_latent_scaling(const Matrix& latents) {
  if (latents.cols != latent_dim_)
    throw Error(ErrorCategory::validation,
                "latent width " + std::to_string(latents.cols) +
                    " does not match model (" + std::to_string(latent_dim_) +
                    ")");
  if (latents.rows == 0)
    throw Error(ErrorCategory::validation,
                "cannot fit latent scaling on an empty matrix");
  column_moments(latents, latent_mean_, latent_std_);
  for (double& s : latent_std_)
    if (s < 1e-12) s = 1.0;
}

Matrix DiffusionModel::to_model_space(const Matrix& latents) const {
  if (latents.cols != latent_dim_)
    throw Error(ErrorCategory::validation, "latent width mismatch");
  Matrix out = latents;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.at(r, c) = (out.at(r, c) - latent_mean_[c]) / latent_std_[c];
  return out;
}

Matrix DiffusionModel::to_latent_space(const Matrix& standardized) const {
  if (standardized.cols != latent_dim_)
    throw Error(ErrorCategory::validation, "latent width mismatch");
  Matrix out = standardized;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.at(r, c) = out.at(r, c) * latent_std_[c] + latent_mean_[c];
  return out;
}

Tensor DiffusionModel::denoise_graph(const Tensor& z_t,
                                     const std::vector<double>& sigma) const {
  const auto& shape = z_t.shape();
  if (shape.size() != 2 || shape[1] != latent_dim_)
    throw Error(ErrorCategory::validation,
                "denoise expects (batch, " + std::to_string(latent_dim_) +
                    ") input");
  const std::size_t b = shape[0];
  if (sigma.size() != b)
    throw Error(ErrorCategory::validation,
                "denoise needs one noise level per row");

  // Interleaved sin/cos of ln(sigma) at geometric frequencies spanning the
  // ln-noise range; the learned map after it makes the exact basis benign.
  const std::size_t pairs = config_.time_pairs;
  std::vector<double> feats(b * 2 * pairs);
  for (std::size_t r = 0; r < b; ++r) {
    if (!(sigma[r] > 0.0))
      throw Error(ErrorCategory::validation, "noise level must be positive");
    const double ls = std::log(sigma[r]);
    for (std::size_t k = 0; k < pairs; ++k) {
      const double omega =
          pairs == 1 ? 1.0
                     : std::pow(100.0, static_cast<double>(k) /
                                           static_cast<double>(pairs - 1));
      feats[r * 2 * pairs + 2 * k] = std::sin(omega * ls);
      feats[r * 2 * pairs + 2 * k + 1] = std::cos(omega * ls);
    }
  }
  Tensor t_feats = Tensor::constant({b, 2 * pairs}, std::move(feats));

  Tensor h0 = ad::add(ad::matmul(z_t, fc_in_.w), fc_in_.b);
  Tensor t_emb = ad::add(ad::matmul(t_feats, temb_.w), temb_.b);
  Tensor h = ad::silu(ad::add(h0, t_emb));
  h = ad::silu(ad::add(ad::matmul(h, fc1_.w), fc1_.b));
  h = ad::silu(ad::add(ad::matmul(h, fc2_.w), fc2_.b));
  h = ad::silu(ad::add(ad::matmul(h, fc3_.w), fc3_.b));
  return ad::add(ad::matmul(h, fc_out_.w), fc_out_.b);
}

Matrix DiffusionModel::denoise(const Matrix& z_t,
                               const std::vector<double>& sigma) const {
  Tensor in = Tensor::constant({z_t.rows, z_t.cols},
                               std::vector<double>(z_t.data));
  Tensor out = denoise_graph(in, sigma);
  Matrix m(z_t.rows, z_t.cols);
  std::copy(out.values().begin(), out.values().end(), m.data.begin());
  return m;
}

Tensor DiffusionModel::training_loss(const Matrix& z0, Rng& rng) const {
  if (z0.rows == 0)
    throw Error(ErrorCategory::validation, "empty batch");
  if (z0.cols != latent_dim_)
    throw Error(ErrorCategory::validation, "latent width mismatch");
  const std::size_t b = z0.rows;
  std::vector<double> sigma(b);
  const double lo = std::log(config_.sigma_min);
  const double hi = std::log(config_.sigma_max);
  for (double& s : sigma) s = std::exp(rng.uniform(lo, hi));
  std::vector<double> eps(b * latent_dim_);
  for (double& e : eps) e = rng.normal();
  std::vector<double> noisy(b * latent_dim_);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < latent_dim_; ++c)
      noisy[r * latent_dim_ + c] =
          z0.at(r, c) + sigma[r] * eps[r * latent_dim_ + c];

  Tensor z_t = Tensor::constant({b, latent_dim_}, std::move(noisy));
  Tensor target = Tensor::constant({b, latent_dim_}, std::move(eps));
  Tensor diff = ad::add(denoise_graph(z_t, sigma), ad::scale(target, -1.0));
  return ad::scale(ad::sum_squares(diff), 1.0 / static_cast<double>(b));
}

Matrix DiffusionModel::sample(std::size_t n, std::uint64_t seed,
                              std::size_t steps, bool probability_flow) const {
  DenoiseFn fn = [this](const Matrix& z, const std::vector<double>& s) {
    return denoise(z, s);
  };
  Matrix z = sample_from_denoiser(fn, latent_dim_, n,
                                  steps == 0 ? config_.sample_steps : steps,
                                  config_.sigma_min, config_.sigma_max, seed,
                                  probability_flow);
  return to_latent_space(z);
}

std::vector<std::pair<std::string, Tensor>> DiffusionModel::named_params()
    const {
  return {
      {"den.fc_in.w", fc_in_.w},   {"den.fc_in.b", fc_in_.b},
      {"den.temb.w", temb_.w},     {"den.temb.b", temb_.b},
      {"den.fc1.w", fc1_.w},       {"den.fc1.b", fc1_.b},
      {"den.fc2.w", fc2_.w},       {"den.fc2.b", fc2_.b},
      {"den.fc3.w", fc3_.w},       {"den.fc3.b", fc3_.b},
      {"den.fc_out.w", fc_out_.w}, {"den.fc_out.b", fc_out_.b},
  };
}

Matrix perturb(const Matrix& z0, double sigma, Rng& rng) {
  if (sigma < 0.0)
    throw Error(ErrorCategory::validation, "noise level must be nonnegative");
  Matrix out = z0;
  for (double& v : out.data) v += sigma * rng.normal();
  return out;
}

double denoising_loss_value(const DenoiseFn& fn, const Matrix& z0,
                            double sigma_min, double sigma_max, Rng& rng) {
  if (z0.rows == 0)
    throw Error(ErrorCategory::validation, "empty batch");
  const std::size_t b = z0.rows;
  const std::size_t w = z0.cols;
  std::vector<double> sigma(b);
  const double lo = std::log(sigma_min);
  const double hi = std::log(sigma_max);
  for (double& s : sigma) s = std::exp(rng.uniform(lo, hi));
  std::vector<double> eps(b * w);
  for (double& e : eps) e = rng.normal();
  Matrix z_t(b, w);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < w; ++c)
      z_t.at(r, c) = z0.at(r, c) + sigma[r] * eps[r * w + c];
  Matrix pred = fn(z_t, sigma);
  if (pred.rows != b || pred.cols != w)
    throw Error(ErrorCategory::validation, "denoiser changed the batch shape");
  double total = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = pred.data[i] - eps[i];
    total += d * d;
  }
  return total / static_cast<double>(b);
}

Matrix sample_from_denoiser(const DenoiseFn& fn, std::size_t latent_dim,
                            std::size_t n, std::size_t steps, double sigma_min,
                            double sigma_max, std::uint64_t seed,
                            bool probability_flow) {
  if (steps == 0)
    throw Error(ErrorCategory::validation, "steps must be positive");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
    throw Error(ErrorCategory::validation,
                "noise range requires 0 < sigma_min < sigma_max");
  Matrix z(n, latent_dim);
  if (n == 0) return z;
  Rng rng(seed);
  for (double& v : z.data) v = sigma_max * rng.normal();

  // Geometric grid sigma_max -> sigma_min. With score s = -eps_hat / sigma
  // and alpha(t) = 1, the reverse drift -2*sigma*s*dt becomes 2*eps_hat*dt
  // (dt < 0 walking down); the flow variant halves it and drops the noise.
  const double ratio = sigma_min / sigma_max;
  for (std::size_t i = 0; i < steps; ++i) {
    const double s_cur =
        sigma_max * std::pow(ratio, static_cast<double>(i) /
                                        static_cast<double>(steps));
    const double s_next =
        sigma_max * std::pow(ratio, static_cast<double>(i + 1) /
                                        static_cast<double>(steps));
    const double dt = s_next - s_cur;
    Matrix eps_hat = fn(z, std::vector<double>(n, s_cur));
    if (eps_hat.rows != n || eps_hat.cols != latent_dim)
      throw Error(ErrorCategory::validation,
                  "denoiser changed the batch shape");
    const double drift = probability_flow ? dt : 2.0 * dt;
    const double diff_coef =
        probability_flow ? 0.0 : std::sqrt(2.0 * s_cur * (-dt));
    for (std::size_t j = 0; j < z.data.size(); ++j) {
      z.data[j] += drift * eps_hat.data[j];
      if (diff_coef != 0.0) z.data[j] += diff_coef * rng.normal();
    }
  }
  return z;
}

DiffusionModel train_diffusion(const Matrix& latents,
                               const DiffusionConfig& config,
                               std::uint64_t seed,
                               std::vector<DiffusionEpochLog>* log,
                               std::uint64_t source_fingerprint) {
  config.validate();
  if (latents.rows == 0)
    throw Error(ErrorCategory::validation, "cannot train on empty latents");

  DiffusionModel model(latents.cols, config, seed);
  model.set_source_fingerprint(source_fingerprint);
  model.fit_latent_scaling(latents);
  Matrix zs = model.to_model_space(latents);

  auto named = model.named_params();
  std::vector<Tensor> params;
  for (auto& [name, t] : named) params.push_back(t);
  ad::Adam opt(params, config.lr);

  Rng rng(seed ^ 0x517cc1b727220a95ull);  // training stream, distinct from init
  std::vector<std::size_t> order(zs.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double sum_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < zs.rows; begin += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, zs.rows - begin);
      Matrix scratch(count, zs.cols);
      for (std::size_t r = 0; r < count; ++r)
        std::copy(zs.row(order[begin + r]), zs.row(order[begin + r]) + zs.cols,
                  scratch.row(r));
      Tensor loss = model.training_loss(scratch, rng);
      const double value = loss.item();
      if (!std::isfinite(value))
        throw Error(ErrorCategory::training,
                    "non-finite loss at step " + std::to_string(step));
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
      ++step;
      sum_loss += value * static_cast<double>(count);
      seen += count;
    }
    if (log) log->push_back({sum_loss / static_cast<double>(seen)});
  }
  return model;
}

Checkpoint DiffusionModel::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.fingerprint = source_fingerprint_;
  nlohmann::ordered_json cfg;
  cfg["model"] = "diffusion";
  cfg["latent_dim"] = latent_dim_;
  cfg["hidden"] = config_.hidden;
  cfg["time_pairs"] = config_.time_pairs;
  cfg["sigma_min"] = config_.sigma_min;
  cfg["sigma_max"] = config_.sigma_max;
  cfg["lr"] = config_.lr;
  cfg["epochs"] = config_.epochs;
  cfg["batch_size"] = config_.batch_size;
  cfg["sample_steps"] = config_.sample_steps;
  ckpt.config_json = cfg.dump();
  for (const auto& [name, tensor] : named_params()) {
    NamedTensorRecord rec;
    rec.name = name;
    rec.shape.assign(tensor.shape().begin(), tensor.shape().end());
    rec.values.assign(tensor.values().begin(), tensor.values().end());
    ckpt.tensors.push_back(std::move(rec));
  }
  ckpt.tensors.push_back({"latent.mean", {latent_dim_}, latent_mean_});
  ckpt.tensors.push_back({"latent.std", {latent_dim_}, latent_std_});
  return ckpt;
}

DiffusionModel DiffusionModel::from_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ckpt.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::validation,
                std::string("checkpoint config is not valid JSON: ") +
                    e.what());
  }
  if (!cfg.contains("model") || cfg["model"] != "diffusion")
    throw Error(ErrorCategory::validation,
                "checkpoint does not hold a diffusion model");
  DiffusionConfig config;
  const std::size_t latent_dim = cfg["latent_dim"].get<std::size_t>();
  config.hidden = cfg["hidden"].get<std::size_t>();
  config.time_pairs = cfg["time_pairs"].get<std::size_t>();
  config.sigma_min = cfg["sigma_min"].get<double>();
  config.sigma_max = cfg["sigma_max"].get<double>();
  config.lr = cfg["lr"].get<double>();
  config.epochs = cfg["epochs"].get<std::size_t>();
  config.batch_size = cfg["batch_size"].get<std::size_t>();
  config.sample_steps = cfg["sample_steps"].get<std::size_t>();

  DiffusionModel model(latent_dim, config, /*seed=*/0);
  model.source_fingerprint_ = ckpt.fingerprint;
  for (auto& [name, tensor] : model.named_params()) {
    const NamedTensorRecord& rec = ckpt.tensor(name);
    const auto& shape = tensor.shape();
    if (rec.shape.size() != shape.size() ||
        !std::equal(shape.begin(), shape.end(), rec.shape.begin()))
      throw Error(ErrorCategory::validation,
                  "checkpoint tensor " + name + " has the wrong shape");
    std::copy(rec.values.begin(), rec.values.end(),
              tensor.mutable_values().begin());
  }
  const NamedTensorRecord& mean = ckpt.tensor("latent.mean");
  const NamedTensorRecord& sd = ckpt.tensor("latent.std");
  if (mean.values.size() != latent_dim || sd.values.size() != latent_dim)
    throw Error(ErrorCategory::validation,
                "latent scaling vectors have the wrong length");
  model.latent_mean_ = mean.values;
  model.latent_std_ = sd.values;
  return model;
}

void save_diffusion(const DiffusionModel& model, const std::string& path) {
  write_checkpoint(model.to_checkpoint(), path);
}

DiffusionModel load_diffusion(const std::string& path,
                              std::uint64_t expected_fingerprint) {
  return DiffusionModel::from_checkpoint(
      read_checkpoint(path, expected_fingerprint));
}

}  // namespace tabsynth
