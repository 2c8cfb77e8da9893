// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>

#include "common/error.hpp"

namespace mvbind::trainer {

namespace {

prophead::ProjectionHead<float> make_head(std::uint64_t seed, std::uint32_t d_in,
                                          const ModelSpec& spec) {
  auto h = prophead::init_head<float>(seed, d_in, spec.d_hid, spec.d_out);
  h.dropout_p = static_cast<float>(spec.dropout_p);
  h.bn_momentum = static_cast<float>(spec.bn_momentum);
  h.bn_eps = static_cast<float>(spec.bn_eps);
  h.validate();
  return h;
}

Mat<float> gather(const embedio::EmbeddingMatrix& m, std::span<const std::size_t> rows) {
  Mat<float> out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.data() + r * m.dim());
  }
  return out;
}

}  // namespace

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
  Model model;
  model.video_head = make_head(derive_seed(seed, "init.video"), spec.d_in_video, spec);
  model.audio_head = make_head(derive_seed(seed, "init.audio"), spec.d_in_audio, spec);
  // The checkpoint stores temperature as float32.
  model.temperature = static_cast<double>(static_cast<float>(spec.temperature));
  model.validate();
  return model;
}

OptState OptState::fresh(const Model& model) {
  return OptState{prophead::AdamState<float>::fresh(model.video_head),
                  prophead::AdamState<float>::fresh(model.audio_head)};
}

void TrainConfig::validate() const {
  if (batch_size < 2) fail(ErrorCode::kInvalidArgument, "batch size must be at least 2");
  if (epochs < 1) fail(ErrorCode::kInvalidArgument, "epochs must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
}

double train_step(Model& model, const Mat<float>& video, const Mat<float>& audio, OptState& opt,
                  Rng& rng, double lr, const GradientHook& hook) {
  if (video.rows() < 2 || video.rows() != audio.rows()) {
    fail(ErrorCode::kInvalidArgument,
         "training batch needs at least 2 pairs (a single pair has no negatives)");
  }
  auto diverged = [&](double loss) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "training diverged at step %llu: loss = %g",
                  static_cast<unsigned long long>(opt.step() + 1), loss);
    fail(ErrorCode::kDivergence, buf);
  };
  std::optional<binder::ContrastiveStep<float>> computed;
  try {
    computed = binder::contrastive_step(model, video, audio, rng);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFinite) throw;
    diverged(std::numeric_limits<double>::quiet_NaN());
  }
  auto& step = *computed;
  if (!std::isfinite(step.loss) || step.loss > kDivergenceLimit) diverged(step.loss);
  if (hook) hook(step);
  prophead::apply_update(model.video_head, step.video, opt.video, lr);
  prophead::apply_update(model.audio_head, step.audio, opt.audio, lr);
  return step.loss;
}

TrainHistory train(Model& model, OptState& opt, const embedio::PairedDataset& train_set,
                   const TrainConfig& cfg, const EvalHook& eval) {
  cfg.validate();
  if (train_set.count() == 0) fail(ErrorCode::kInvalidArgument, "training set is empty");
  if (train_set.count() < cfg.batch_size) {
    fail(ErrorCode::kInvalidArgument, "training set (" + std::to_string(train_set.count()) +
                                          " pairs) is smaller than the batch size " +
                                          std::to_string(cfg.batch_size));
  }
  if (train_set.video().dim() != model.video_head.d_in() ||
      train_set.audio().dim() != model.audio_head.d_in()) {
    fail(ErrorCode::kShapeMismatch, "training data dims do not match the model input dims");
  }

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  const std::size_t n = train_set.count();
  const std::size_t steps_per_epoch = n / cfg.batch_size;

  TrainHistory history;
  history.losses.reserve(steps_per_epoch * cfg.epochs);
  std::vector<std::size_t> order(n);
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    if (cfg.shuffle) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      std::span<const std::size_t> rows(order.data() + b * cfg.batch_size, cfg.batch_size);
      history.losses.push_back(train_step(model, gather(train_set.video(), rows),
                                          gather(train_set.audio(), rows), opt, dropout_rng,
                                          cfg.lr));
    }
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    if (eval && cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) {
      history.evals.push_back({epoch + 1, eval(model)});
    }
  }
  return history;
}

TrainHistory train(Model& model, const embedio::PairedDataset& train_set, const TrainConfig& cfg) {
  auto opt = OptState::fresh(model);
  return train(model, opt, train_set, cfg);
}

std::string format_loss_history(const TrainHistory& history) {
  std::string out = "step\tloss\n";
  char buf[64];
  for (std::size_t i = 0; i < history.losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.9g\n", i + 1, history.losses[i]);
    out += buf;
  }
  return out;
}

embedio::PairedDataset gen_synthetic(std::size_t n_pairs, std::size_t latent_dim, double noise,
                                     std::uint64_t seed, std::uint32_t dim) {
  if (n_pairs < 1 || latent_dim < 1 || dim < 1) {
    fail(ErrorCode::kInvalidArgument, "synthetic data needs n_pairs, latent_dim and dim >= 1");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    fail(ErrorCode::kInvalidArgument, "synthetic noise must be non-negative");
  }
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  auto draw_map = [&](std::string_view label) {
    Rng rng(derive_seed(seed, label));
    Eigen::MatrixXd map(dim, static_cast<Eigen::Index>(latent_dim));
    for (Eigen::Index r = 0; r < map.rows(); ++r) {
      for (Eigen::Index c = 0; c < map.cols(); ++c) map(r, c) = map_scale * rng.normal();
    }
    return map;
  };
  const Eigen::MatrixXd video_map = draw_map("synthetic.video_map");
  const Eigen::MatrixXd audio_map = draw_map("synthetic.audio_map");

  Rng latent_rng(derive_seed(seed, "synthetic.latent"));
  Rng noise_rng(derive_seed(seed, "synthetic.noise"));
  std::vector<std::string> ids;
  std::vector<float> video(n_pairs * dim);
  std::vector<float> audio(n_pairs * dim);
  Eigen::VectorXd z(static_cast<Eigen::Index>(latent_dim));
  char buf[32];
  for (std::size_t i = 0; i < n_pairs; ++i) {
    std::snprintf(buf, sizeof(buf), "pair_%07zu", i);
    ids.emplace_back(buf);
    for (auto& zi : z) zi = latent_rng.normal();
    const Eigen::VectorXd v = video_map * z;
    const Eigen::VectorXd a = audio_map * z;
    for (std::uint32_t d = 0; d < dim; ++d) {
      video[i * dim + d] = static_cast<float>(v[d] + noise * noise_rng.normal());
    }
    for (std::uint32_t d = 0; d < dim; ++d) {
      audio[i * dim + d] = static_cast<float>(a[d] + noise * noise_rng.normal());
    }
  }
  auto ids_copy = ids;
  return embedio::PairedDataset(embedio::EmbeddingMatrix(std::move(ids), dim, std::move(video)),
                                embedio::EmbeddingMatrix(std::move(ids_copy), dim, std::move(audio)));
}

}  // namespace mvbind::trainer
