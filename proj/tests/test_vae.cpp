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
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "tabsynth/simulate.hpp"
#include "tabsynth/vae.hpp"

using namespace tabsynth;
using ad::Tensor;

namespace {

std::vector<ColumnSchema> tiny_schema() {
  std::vector<ColumnSchema> s = {
      {"x", ColumnKind::real_valued, {}},
      {"cat2", ColumnKind::nominal, {"a", "b"}},
      {"cat3", ColumnKind::nominal, {"p", "q", "r"}},
  };
  s[0].standardized = true;
  s[0].mean = 0.0;
  s[0].std_dev = 1.0;
  return s;
}

// Encoded rows for the tiny schema: [x, onehot2, onehot3].
Matrix tiny_rows() {
  Matrix m(2, 6);
  double r0[] = {0.5, 1, 0, 0, 1, 0};
  double r1[] = {-1.25, 0, 1, 0, 0, 1};
  for (int c = 0; c < 6; ++c) {
    m.at(0, c) = r0[c];
    m.at(1, c) = r1[c];
  }
  return m;
}

}  // namespace

TEST_CASE("tokenizing a zero continuous input gives the bias row") {
  Rng rng(3);
  std::vector<ColumnSchema> schema = {{"x", ColumnKind::real_valued, {}}};
  FeatureTokenizer tok(schema, 4, rng);
  Matrix rows(1, 1);
  rows.at(0, 0) = 0.0;
  Tensor e = tok.tokenize(rows);
  auto b = tok.named_params()[1];  // tok.x.b
  REQUIRE(b.first == "tok.x.b");
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(e.values()[k] == doctest::Approx(b.second.values()[k]));
}

TEST_CASE("tokenizing a category with zero bias selects the embedding row") {
  Rng rng(4);
  std::vector<ColumnSchema> schema = {
      {"c", ColumnKind::nominal, {"a", "b", "z"}}};
  FeatureTokenizer tok(schema, 4, rng);
  auto params = tok.named_params();
  REQUIRE(params[1].first == "tok.c.b");
  for (double& v : params[1].second.mutable_values()) v = 0.0;
  Matrix rows(1, 3);
  rows.at(0, 1) = 1.0;  // category index 1
  Tensor e = tok.tokenize(rows);
  const Tensor& w = params[0].second;  // (3,4)
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(e.values()[k] == doctest::Approx(w.values()[4 + k]));
}

TEST_CASE("token matrix shape is tokens by width") {
  Rng rng(5);
  std::vector<ColumnSchema> schema = {
      {"a", ColumnKind::real_valued, {}},
      {"b", ColumnKind::real_valued, {}},
      {"c1", ColumnKind::nominal, {"x", "y"}},
      {"c2", ColumnKind::nominal, {"x", "y", "z"}},
      {"c3", ColumnKind::count, {"0", "1"}},
  };
  FeatureTokenizer tok(schema, 4, rng);
  Matrix rows(1, 2 + 2 + 3 + 2);
  rows.at(0, 2) = 1.0;
  rows.at(0, 4) = 1.0;
  rows.at(0, 7) = 1.0;
  Tensor e = tok.tokenize(rows);
  CHECK(e.shape() == ad::Shape{1, 5, 4});
}

TEST_CASE("tokenization is linear in each continuous input") {
  Rng rng(6);
  std::vector<ColumnSchema> schema = {{"x", ColumnKind::real_valued, {}}};
  FeatureTokenizer tok(schema, 8, rng);
  const double x = 0.7;
  Matrix at_x(1, 1), at_2x(1, 1);
  at_x.at(0, 0) = x;
  at_2x.at(0, 0) = 2 * x;
  Tensor e1 = tok.tokenize(at_x);
  Tensor e2 = tok.tokenize(at_2x);
  const Tensor& w = tok.named_params()[0].second;
  for (std::size_t k = 0; k < 8; ++k)
    CHECK(e2.values()[k] - e1.values()[k] ==
          doctest::Approx(x * w.values()[k]).epsilon(1e-9));
}

TEST_CASE("detokenized discrete outputs are probability vectors") {
  Rng rng(7);
  FeatureTokenizer tok(tiny_schema(), 4, rng);
  Tensor e = tok.tokenize(tiny_rows());
  DetokenizedBatch out = tok.detokenize(e);
  REQUIRE(out.per_token.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) {
    const auto& probs = out.per_token[i].values();
    std::size_t c = out.per_token[i].shape()[2];
    for (std::size_t r = 0; r < 2; ++r) {
      double sum = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        double p = probs[r * c + k];
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("equal logits detokenize to a uniform distribution") {
  Rng rng(8);
  std::vector<ColumnSchema> schema = {
      {"c", ColumnKind::nominal, {"a", "b", "z", "w"}}};
  FeatureTokenizer tok(schema, 4, rng);
  auto params = tok.named_params();
  REQUIRE(params[2].first == "tok.c.w_hat");
  for (double& v : params[2].second.mutable_values()) v = 0.0;
  REQUIRE(params[3].first == "tok.c.b_hat");
  for (double& v : params[3].second.mutable_values()) v = 0.0;
  Matrix rows(1, 4);
  rows.at(0, 2) = 1.0;
  DetokenizedBatch out = tok.detokenize(tok.tokenize(rows));
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(out.per_token[0].values()[k] == doctest::Approx(0.25));
}

TEST_CASE("every tokenizer parameter block gets gradient from the loss") {
  Rng rng(9);
  FeatureTokenizer tok(tiny_schema(), 4, rng);
  Matrix rows = tiny_rows();
  DetokenizedBatch out = tok.detokenize(tok.tokenize(rows));
  Tensor loss = tok.reconstruction_loss(out, rows, 0, rows.rows);
  ad::backward(loss);
  for (const auto& [name, p] : tok.named_params()) {
    REQUIRE_MESSAGE(p.has_grad(), name);
    double sum = 0.0;
    for (double g : p.grad()) sum += std::abs(g);
    CHECK_MESSAGE(sum > 0.0, name, " has an all-zero gradient");
  }
}

TEST_CASE("kl identities") {
  Tensor zero = Tensor::zeros({1, 1, 1});
  CHECK(gaussian_kl(zero, zero).item() == doctest::Approx(0.0));
  Tensor one = Tensor::constant({1, 1, 1}, {1.0});
  CHECK(gaussian_kl(one, zero).item() == doctest::Approx(0.5));
  for (double mu : {-2.0, -0.5, 0.0, 1.0, 2.0})
    for (double lv : {-2.0, -0.5, 0.0, 1.0, 2.0}) {
      double kl = gaussian_kl(Tensor::constant({1, 1, 1}, {mu}),
                              Tensor::constant({1, 1, 1}, {lv}))
                      .item();
      CHECK(kl >= -1e-12);
      if (mu == 0.0 && lv == 0.0) CHECK(kl == doctest::Approx(0.0));
    }
}

TEST_CASE("encoder output sigma is strictly positive and deterministic") {
  VaeConfig cfg;
  cfg.d = 4;
  VaeModel model(tiny_schema(), "", cfg, 21);
  Matrix rows = tiny_rows();
  auto [mu1, lv1] = model.encode_batch(rows, 0, 2);
  auto [mu2, lv2] = model.encode_batch(rows, 0, 2);
  Tensor sigma = VaeModel::sigma_from_logvar(lv1);
  for (double s : sigma.values()) CHECK(s > 0.0);
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    CHECK(mu1.values()[i] == mu2.values()[i]);
    CHECK(lv1.values()[i] == lv2.values()[i]);
  }
  CHECK(mu1.shape() == ad::Shape{2, 3, 4});
}

TEST_CASE("reparameterize with zero sigma returns mu exactly") {
  Rng rng(31);
  Tensor mu = Tensor::constant({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor sigma = Tensor::zeros({2, 2, 2});
  Tensor z = VaeModel::reparameterize(mu, sigma, rng);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(z.values()[i] == mu.values()[i]);
}

TEST_CASE("reparameterize noise has standard moments and fixed-seed identity") {
  Tensor mu = Tensor::zeros({100, 10, 10});
  Tensor sigma = Tensor::constant({100, 10, 10},
                                  std::vector<double>(10000, 1.0));
  Rng rng_a(77);
  Tensor za = VaeModel::reparameterize(mu, sigma, rng_a);
  double mean = 0.0;
  for (double v : za.values()) mean += v;
  mean /= 10000.0;
  double var = 0.0;
  for (double v : za.values()) var += (v - mean) * (v - mean);
  var /= 10000.0;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
  Rng rng_b(77);
  Tensor zb = VaeModel::reparameterize(mu, sigma, rng_b);
  for (std::size_t i = 0; i < 10000; ++i)
    CHECK(za.values()[i] == zb.values()[i]);
}

TEST_CASE("attention rows are stochastic at every layer") {
  VaeConfig cfg;
  cfg.d = 4;
  VaeModel model(tiny_schema(), "", cfg, 41);
  model.set_capture_attention(true);
  Matrix rows = tiny_rows();
  auto [mu, lv] = model.encode_batch(rows, 0, 2);
  Tensor z = ad::add(mu, Tensor::zeros(mu.shape()));
  (void)model.decode(z);
  auto mats = model.all_attention();
  CHECK(mats.size() == 8);  // 4 blocks, 2 heads each
  for (const Tensor& attn : mats) {
    const auto& shape = attn.shape();
    std::size_t m = shape[2];
    std::size_t rows_total = attn.size() / m;
    for (std::size_t r = 0; r < rows_total; ++r) {
      double sum = 0.0;
      for (std::size_t k = 0; k < m; ++k) sum += attn.values()[r * m + k];
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("full loss gradient matches finite differences on a tiny model") {
  VaeConfig cfg;
  cfg.d = 4;
  VaeModel model(tiny_schema(), "", cfg, 51);
  Matrix rows = tiny_rows();
  Rng noise(99);
  Tensor eps;
  {
    auto [mu, lv] = model.encode_batch(rows, 0, 2);
    std::vector<double> e(mu.size());
    for (double& x : e) x = noise.normal();
    eps = Tensor::constant(mu.shape(), std::move(e));
  }
  auto named = model.named_params();
  std::vector<Tensor> params;
  for (auto& [name, t] : named) params.push_back(t);
  auto build = [&]() {
    auto [mu, lv] = model.encode_batch(rows, 0, 2);
    Tensor sigma = VaeModel::sigma_from_logvar(lv);
    Tensor z = ad::add(mu, ad::mul(sigma, eps));
    DetokenizedBatch out = model.tokenizer().detokenize(model.decode(z));
    return vae_loss(model.tokenizer(), out, rows, 0, 2, mu, lv, 0.01).total;
  };
  auto report = ad::grad_check(params, build);
  CHECK_MESSAGE(report.passed, "max_rel_error=", report.max_rel_error);
}

TEST_CASE("training reduces the loss and is seed-deterministic") {
  Table t = simulate_zip_table(128, crash_simulator_spec(),
                               default_crash_zip_params(), 61);
  VaeConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  std::vector<VaeEpochLog> log_a, log_b;
  VaeModel a = train_vae(t, cfg, 5, &log_a);
  VaeModel b = train_vae(t, cfg, 5, &log_b);
  REQUIRE(log_a.size() == 10);
  CHECK(log_a.back().total < log_a.front().total);
  for (std::size_t i = 0; i < log_a.size(); ++i)
    CHECK(log_a[i].total == log_b[i].total);
}

TEST_CASE("sixteen-row overfit reconstructs the table") {
  Table t = simulate_zip_table(16, crash_simulator_spec(),
                               default_crash_zip_params(), 71);
  VaeConfig cfg;
  cfg.epochs = 6000;
  cfg.batch_size = 16;
  cfg.fixed_beta = 1e-4;
  VaeModel model = train_vae(t, cfg, 7, nullptr);
  Table recon = model.decode_latents(model.extract_latents(t));
  std::size_t discrete_errors = 0;
  double worst_cont = 0.0;
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      if (t.schema[c].discrete()) {
        discrete_errors += recon.cells[c][r] != t.cells[c][r];
      } else {
        double sd = model.schema()[c].std_dev;
        worst_cont = std::max(
            worst_cont, std::abs(recon.cells[c][r] - t.cells[c][r]) / sd);
      }
    }
  CHECK(discrete_errors == 0);
  CHECK(worst_cont <= 0.05);
}

TEST_CASE("checkpoint round-trip preserves the model exactly") {
  VaeConfig cfg;
  cfg.d = 4;
  Table t = simulate_zip_table(64, crash_simulator_spec(),
                               default_crash_zip_params(), 81);
  cfg.epochs = 2;
  cfg.batch_size = 32;
  VaeModel model = train_vae(t, cfg, 9, nullptr);
  std::string path = "/tmp/tabsynth_vae_ckpt.bin";
  save_vae(model, path);
  VaeModel loaded = load_vae(path);
  Matrix rows = model.encode_rows(t);
  auto [mu_a, lv_a] = model.encode_batch(rows, 0, 8);
  auto [mu_b, lv_b] = loaded.encode_batch(rows, 0, 8);
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    CHECK(mu_a.values()[i] == mu_b.values()[i]);
    CHECK(lv_a.values()[i] == lv_b.values()[i]);
  }
  CHECK(schema_fingerprint(loaded.schema(), loaded.target_column()) ==
        schema_fingerprint(model.schema(), model.target_column()));
  CHECK_THROWS_AS(load_vae(path, 0xdeadbeefull), Error);
  std::remove(path.c_str());
}

TEST_CASE("latent round trip flattens and restores shapes") {
  VaeConfig cfg;
  cfg.d = 4;
  Table t = simulate_zip_table(10, crash_simulator_spec(),
                               default_crash_zip_params(), 91);
  fit_standardization(t);
  VaeModel model(t.schema, t.target_column, cfg, 15);
  Matrix lat = model.extract_latents(t);
  CHECK(lat.rows == 10);
  CHECK(lat.cols == model.latent_width());
  // Identical rows produce identical latents.
  Table two = t.take_rows({3, 3});
  Matrix lat2 = model.extract_latents(two);
  for (std::size_t c = 0; c < lat2.cols; ++c)
    CHECK(lat2.at(0, c) == lat2.at(1, c));
  Table decoded = model.decode_latents(lat);
  CHECK(decoded.n_rows() == 10);
  CHECK(decoded.n_cols() == t.n_cols());
}

TEST_CASE("decode rejects mis-shaped latents") {
  VaeConfig cfg;
  cfg.d = 4;
  VaeModel model(tiny_schema(), "", cfg, 17);
  CHECK_THROWS_AS(model.decode(Tensor::zeros({1, 2, 4})), Error);
  Matrix bad(1, 5);
  CHECK_THROWS_AS(model.decode_latents(bad), Error);
}
