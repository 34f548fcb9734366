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
#include "tabsynth/vae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace tabsynth {

using ad::Tensor;

void VaeConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0)
    throw Error(ErrorCategory::config,
                "vae: embedding width must be a positive multiple of heads");
  if (ffn_mult == 0 || epochs == 0 || batch_size == 0)
    throw Error(ErrorCategory::config,
                "vae: ffn_mult, epochs, and batch_size must be positive");
  if (!(lr > 0.0))
    throw Error(ErrorCategory::config, "vae: learning rate must be positive");
  if (fixed_beta < 0.0 || !(beta_start > 0.0) || !(beta_floor > 0.0) ||
      beta_patience == 0)
    throw Error(ErrorCategory::config, "vae: invalid beta schedule");
}

Tensor gaussian_kl(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape() != logvar.shape())
    throw Error(ErrorCategory::validation,
                "gaussian_kl: mu and logvar shapes differ");
  const double b = static_cast<double>(mu.shape()[0]);
  const double n = static_cast<double>(mu.size());
  // 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2), averaged over the batch.
  Tensor grow = ad::add(ad::sum_squares(mu), ad::sum_all(ad::exp(logvar)));
  Tensor shrink = ad::add(ad::sum_all(logvar), Tensor::scalar(n));
  return ad::scale(ad::add(grow, ad::scale(shrink, -1.0)), 0.5 / b);
}

VaeLossParts vae_loss(const FeatureTokenizer& tokenizer,
                      const DetokenizedBatch& reconstruction,
                      const Matrix& rows, std::size_t row_begin,
                      std::size_t row_count, const Tensor& mu,
                      const Tensor& logvar, double beta) {
  Tensor recon = tokenizer.reconstruction_loss(reconstruction, rows,
                                               row_begin, row_count);
  Tensor kl = gaussian_kl(mu, logvar);
  Tensor total = ad::add(recon, ad::scale(kl, beta));
  return {total, recon, kl};
}

VaeModel::VaeModel(std::vector<ColumnSchema> schema,
                   std::string target_column, VaeConfig config,
                   std::uint64_t init_seed)
    : schema_(std::move(schema)),
      target_column_(std::move(target_column)),
      config_(config) {
  config_.validate();
  Rng rng(init_seed);
  tokenizer_ =
      std::make_unique<FeatureTokenizer>(schema_, config_.d, rng);
  const std::size_t ffn = config_.ffn_mult * config_.d;
  encoder_.emplace_back(config_.d, config_.heads, ffn, rng);
  encoder_.emplace_back(config_.d, config_.heads, ffn, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.d));
  auto head_init = [&](std::size_t r, std::size_t c) {
    std::vector<double> v(r * c);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return Tensor::param({r, c}, std::move(v));
  };
  mu_w_ = head_init(config_.d, config_.d);
  mu_b_ = head_init(1, config_.d);
  lv_w_ = head_init(config_.d, config_.d);
  lv_b_ = head_init(1, config_.d);
  decoder_.emplace_back(config_.d, config_.heads, ffn, rng);
  decoder_.emplace_back(config_.d, config_.heads, ffn, rng);
}

std::size_t VaeModel::latent_width() const {
  return tokenizer_->n_tokens() * config_.d;
}

std::pair<Tensor, Tensor> VaeModel::encode_batch(const Matrix& rows,
                                                 std::size_t row_begin,
                                                 std::size_t row_count) const {
  Tensor h = tokenizer_->tokenize(rows, row_begin, row_count);
  for (const auto& block : encoder_) h = block.forward(h);
  Tensor mu = ad::add(ad::matmul(h, mu_w_), mu_b_);
  Tensor logvar = ad::add(ad::matmul(h, lv_w_), lv_b_);
  return {mu, logvar};
}

Tensor VaeModel::sigma_from_logvar(const Tensor& logvar) {
  return ad::exp(ad::scale(logvar, 0.5));
}

Tensor VaeModel::reparameterize(const Tensor& mu, const Tensor& sigma,
                                Rng& rng) {
  if (mu.shape() != sigma.shape())
    throw Error(ErrorCategory::validation,
                "reparameterize: mu and sigma shapes differ");
  std::vector<double> eps(mu.size());
  for (double& e : eps) e = rng.normal();
  Tensor noise = Tensor::constant(mu.shape(), std::move(eps));
  return ad::add(mu, ad::mul(sigma, noise));
}

Tensor VaeModel::decode(const Tensor& z) const {
  const auto& shape = z.shape();
  if (shape.size() != 3 || shape[1] != tokenizer_->n_tokens() ||
      shape[2] != config_.d)
    throw Error(ErrorCategory::validation,
                "decode expects (batch, " +
                    std::to_string(tokenizer_->n_tokens()) + ", " +
                    std::to_string(config_.d) + ") latents");
  Tensor h = z;
  for (const auto& block : decoder_) h = block.forward(h);
  return h;
}

Matrix VaeModel::encode_rows(const Table& table) const {
  if (table.schema.size() != schema_.size())
    throw Error(ErrorCategory::schema,
                "table does not match the model schema");
  Table tmp = table;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (table.schema[i].name != schema_[i].name ||
        table.schema[i].kind != schema_[i].kind)
      throw Error(ErrorCategory::schema,
                  "table does not match the model schema at column '" +
                      table.schema[i].name + "'");
    tmp.schema[i] = schema_[i];
  }
  tmp.validate();
  return encode(tmp).values;
}

Matrix VaeModel::extract_latents(const Table& table) const {
  Matrix rows = encode_rows(table);
  Matrix out(rows.rows, latent_width());
  const std::size_t chunk = 256;
  for (std::size_t begin = 0; begin < rows.rows; begin += chunk) {
    std::size_t count = std::min(chunk, rows.rows - begin);
    auto [mu, logvar] = encode_batch(rows, begin, count);
    (void)logvar;
    // mu is (count, M, d) row-major, so each batch row is already the
    // flattened latent.
    const auto& vals = mu.values();
    for (std::size_t r = 0; r < count; ++r)
      std::copy(vals.begin() + static_cast<std::ptrdiff_t>(r * out.cols),
                vals.begin() + static_cast<std::ptrdiff_t>((r + 1) * out.cols),
                out.row(begin + r));
  }
  return out;
}

Table VaeModel::decode_latents(const Matrix& flat_latents) const {
  if (flat_latents.cols != latent_width())
    throw Error(ErrorCategory::validation,
                "latent width " + std::to_string(flat_latents.cols) +
                    " does not match the model (" +
                    std::to_string(latent_width()) + ")");
  Matrix encoded(flat_latents.rows, encoded_width(schema_));
  const std::size_t m = tokenizer_->n_tokens();
  const std::size_t chunk = 256;
  for (std::size_t begin = 0; begin < flat_latents.rows; begin += chunk) {
    std::size_t count = std::min(chunk, flat_latents.rows - begin);
    std::vector<double> vals(count * flat_latents.cols);
    for (std::size_t r = 0; r < count; ++r)
      std::copy(flat_latents.row(begin + r),
                flat_latents.row(begin + r) + flat_latents.cols,
                vals.begin() + static_cast<std::ptrdiff_t>(r * flat_latents.cols));
    Tensor z = Tensor::constant({count, m, config_.d}, std::move(vals));
    DetokenizedBatch out = tokenizer_->detokenize(decode(z));
    Matrix part = tokenizer_->to_encoded(out);
    for (std::size_t r = 0; r < count; ++r)
      std::copy(part.row(r), part.row(r) + part.cols, encoded.row(begin + r));
  }
  return decode_encoded(encoded, schema_, target_column_);
}

std::vector<std::pair<std::string, Tensor>> VaeModel::named_params() const {
  auto out = tokenizer_->named_params();
  encoder_[0].collect_params("enc.0", &out);
  encoder_[1].collect_params("enc.1", &out);
  out.emplace_back("head.mu.w", mu_w_);
  out.emplace_back("head.mu.b", mu_b_);
  out.emplace_back("head.lv.w", lv_w_);
  out.emplace_back("head.lv.b", lv_b_);
  decoder_[0].collect_params("dec.0", &out);
  decoder_[1].collect_params("dec.1", &out);
  return out;
}

void VaeModel::set_capture_attention(bool on) {
  for (auto& b : encoder_) b.set_capture_attention(on);
  for (auto& b : decoder_) b.set_capture_attention(on);
}

std::vector<Tensor> VaeModel::all_attention() const {
  std::vector<Tensor> out;
  for (const auto* blocks : {&encoder_, &decoder_})
    for (const auto& b : *blocks)
      for (const auto& a : b.last_attention()) out.push_back(a);
  return out;
}

Checkpoint VaeModel::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.fingerprint = schema_fingerprint(schema_, target_column_);
  nlohmann::ordered_json cfg;
  cfg["model"] = "vae";
  cfg["d"] = config_.d;
  cfg["heads"] = config_.heads;
  cfg["ffn_mult"] = config_.ffn_mult;
  cfg["epochs"] = config_.epochs;
  cfg["batch_size"] = config_.batch_size;
  cfg["lr"] = config_.lr;
  cfg["beta_start"] = config_.beta_start;
  cfg["beta_floor"] = config_.beta_floor;
  cfg["beta_patience"] = config_.beta_patience;
  cfg["fixed_beta"] = config_.fixed_beta;
  cfg["schema"] =
      nlohmann::ordered_json::parse(schema_to_json(schema_, target_column_));
  ckpt.config_json = cfg.dump();
  for (const auto& [name, tensor] : named_params()) {
    NamedTensorRecord rec;
    rec.name = name;
    rec.shape.assign(tensor.shape().begin(), tensor.shape().end());
    rec.values.assign(tensor.values().begin(), tensor.values().end());
    ckpt.tensors.push_back(std::move(rec));
  }
  return ckpt;
}

VaeModel VaeModel::from_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ckpt.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::validation,
                std::string("checkpoint config is not valid JSON: ") +
                    e.what());
  }
  if (!cfg.contains("model") || cfg["model"] != "vae")
    throw Error(ErrorCategory::validation,
                "checkpoint does not hold a vae model");
  VaeConfig config;
  config.d = cfg["d"].get<std::size_t>();
  config.heads = cfg["heads"].get<std::size_t>();
  config.ffn_mult = cfg["ffn_mult"].get<std::size_t>();
  config.epochs = cfg["epochs"].get<std::size_t>();
  config.batch_size = cfg["batch_size"].get<std::size_t>();
  config.lr = cfg["lr"].get<double>();
  config.beta_start = cfg["beta_start"].get<double>();
  config.beta_floor = cfg["beta_floor"].get<double>();
  config.beta_patience = cfg["beta_patience"].get<std::size_t>();
  config.fixed_beta = cfg["fixed_beta"].get<double>();
  std::string target;
  std::vector<ColumnSchema> schema =
      schema_from_json(cfg["schema"].dump(), &target);
  VaeModel model(std::move(schema), std::move(target), config, 0);
  auto params = model.named_params();
  if (params.size() != ckpt.tensors.size())
    throw Error(ErrorCategory::validation,
                "checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                    " tensors, model has " + std::to_string(params.size()));
  for (auto& [name, tensor] : params) {
    const NamedTensorRecord& rec = ckpt.tensor(name);
    ad::Shape shape(rec.shape.begin(), rec.shape.end());
    if (shape != tensor.shape())
      throw Error(ErrorCategory::validation,
                  "checkpoint tensor '" + name + "' has the wrong shape");
    std::copy(rec.values.begin(), rec.values.end(),
              tensor.mutable_values().begin());
  }
  return model;
}

VaeModel train_vae(const Table& table, const VaeConfig& config,
                   std::uint64_t seed, std::vector<VaeEpochLog>* log) {
  config.validate();
  if (table.n_rows() == 0)
    throw Error(ErrorCategory::validation, "cannot train on an empty table");
  Table fitted = table;
  bool needs_fit = false;
  for (const auto& col : fitted.schema)
    needs_fit = needs_fit || (!col.discrete() && !col.standardized);
  if (needs_fit) fit_standardization(fitted);
  fitted.validate();
  Matrix rows = encode(fitted).values;

  VaeModel model(fitted.schema, fitted.target_column, config, seed);
  auto named = model.named_params();
  std::vector<Tensor> params;
  for (auto& [name, t] : named) params.push_back(t);
  ad::Adam opt(params, config.lr);

  Rng rng(seed ^ 0x517cc1b727220a95ull);  // training stream, distinct from init
  std::vector<std::size_t> order(rows.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double beta = config.fixed_beta > 0.0 ? config.fixed_beta
                                        : config.beta_start;
  double best_recon = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;

  Matrix scratch(std::min<std::size_t>(config.batch_size, rows.rows),
                 rows.cols);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double sum_total = 0.0, sum_recon = 0.0, sum_kl = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < rows.rows;
         begin += config.batch_size) {
      std::size_t count = std::min(config.batch_size, rows.rows - begin);
      for (std::size_t r = 0; r < count; ++r)
        std::copy(rows.row(order[begin + r]),
                  rows.row(order[begin + r]) + rows.cols, scratch.row(r));
      auto [mu, logvar] = model.encode_batch(scratch, 0, count);
      Tensor sigma = VaeModel::sigma_from_logvar(logvar);
      Tensor z = VaeModel::reparameterize(mu, sigma, rng);
      DetokenizedBatch recon = model.tokenizer().detokenize(model.decode(z));
      VaeLossParts parts = vae_loss(model.tokenizer(), recon, scratch, 0,
                                    count, mu, logvar, beta);
      double total = parts.total.item();
      if (!std::isfinite(total))
        throw Error(ErrorCategory::training,
                    "non-finite loss at epoch " + std::to_string(epoch));
      opt.zero_grad();
      ad::backward(parts.total);
      opt.step();
      sum_total += total * static_cast<double>(count);
      sum_recon += parts.recon.item() * static_cast<double>(count);
      sum_kl += parts.kl.item() * static_cast<double>(count);
      seen += count;
    }
    VaeEpochLog entry;
    entry.total = sum_total / static_cast<double>(seen);
    entry.recon = sum_recon / static_cast<double>(seen);
    entry.kl = sum_kl / static_cast<double>(seen);
    entry.beta = beta;
    if (log) log->push_back(entry);

    if (config.fixed_beta <= 0.0) {
      if (entry.recon < best_recon - 1e-9) {
        best_recon = entry.recon;
        stall = 0;
      } else if (++stall >= config.beta_patience) {
        beta = std::max(beta * 0.5, config.beta_floor);
        stall = 0;
      }
    }
  }
  return model;
}

void save_vae(const VaeModel& model, const std::string& path) {
  write_checkpoint(model.to_checkpoint(), path);
}

VaeModel load_vae(const std::string& path,
                  std::uint64_t expected_fingerprint) {
  return VaeModel::from_checkpoint(
      read_checkpoint(path, expected_fingerprint));
}

}  // namespace tabsynth
