// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch contrastive training of both projection heads, MVBM
// checkpoints, and the synthetic bindable-pair generator.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "binder/binder.hpp"
#include "embedio/embedio.hpp"
#include "prophead/prophead.hpp"
#include "retrieval/retrieval.hpp"

namespace mvbind::trainer {

using Model = binder::BindModel<float>;

inline constexpr double kDivergenceLimit = 1e4;

struct ModelSpec {
  std::uint32_t d_in_video = 1024;
  std::uint32_t d_in_audio = 1024;
  std::uint32_t d_hid = 512;
  std::uint32_t d_out = 256;
  double temperature = binder::kDefaultTemperature;
  double dropout_p = prophead::kDefaultDropout;
  double bn_momentum = prophead::kDefaultBnMomentum;
  double bn_eps = prophead::kDefaultBnEps;
};

/// Heads are initialized from seeds derived from `seed` with the labels
/// "init.video" and "init.audio".
Model init_model(const ModelSpec& spec, std::uint64_t seed);

struct OptState {
  prophead::AdamState<float> video;
  prophead::AdamState<float> audio;

  static OptState fresh(const Model& model);
  std::uint64_t step() const { return video.step; }
};

struct TrainConfig {
  std::uint32_t batch_size = 128;
  std::uint32_t epochs = 50;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::uint32_t eval_every = 0;  // epochs between eval snapshots; 0 disables

  void validate() const;
};

struct EvalSnapshot {
  std::uint32_t epoch = 0;
  retrieval::RecallReport report;
};

struct TrainHistory {
  std::vector<double> losses;  // one per step
  std::vector<EvalSnapshot> evals;
  std::vector<double> epoch_seconds;
};

/// Evaluation callback run every `eval_every` epochs. It only sees the
/// model, so validation data stays outside the training loop.
using EvalHook = std::function<retrieval::RecallReport(const Model&)>;

/// Lets tests rewrite gradients between backward and the optimizer update.
using GradientHook = std::function<void(binder::ContrastiveStep<float>&)>;

/// One contrastive step on a paired batch (N >= 2); returns the pre-update
/// loss. Throws kDivergence for a non-finite loss or one above 1e4.
double train_step(Model& model, const Mat<float>& video, const Mat<float>& audio, OptState& opt,
                  Rng& rng, double lr, const GradientHook& hook = {});

/// epochs x floor(count / batch_size) steps; the trailing partial batch is
/// dropped. Shuffling and dropout draw from seeds derived from cfg.seed.
TrainHistory train(Model& model, OptState& opt, const embedio::PairedDataset& train_set,
                   const TrainConfig& cfg, const EvalHook& eval = {});

TrainHistory train(Model& model, const embedio::PairedDataset& train_set, const TrainConfig& cfg);

/// Tab-separated "step<TAB>loss" table with a header line.
std::string format_loss_history(const TrainHistory& history);

struct Checkpoint {
  Model model;
  OptState opt;
  TrainConfig config;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const unsigned char> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Shared standard-normal latents z_i mapped through fixed random linear
/// maps: video_i = A z_i + noise * e, audio_i = B z_i + noise * e'. Map
/// entries are N(0, 1/latent_dim) so features have unit scale.
embedio::PairedDataset gen_synthetic(std::size_t n_pairs, std::size_t latent_dim, double noise,
                                     std::uint64_t seed, std::uint32_t dim = 1024);

}  // namespace mvbind::trainer
