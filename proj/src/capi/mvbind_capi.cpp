// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvbind/mvbind.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "borderkit/borderkit.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "embedio/embedio.hpp"
#include "retrieval/retrieval.hpp"
#include "trainer/trainer.hpp"

using namespace mvbind;

struct mvb_embeddings {
  embedio::EmbeddingMatrix m;
};

struct mvb_dataset {
  embedio::PairedDataset d;
};

struct mvb_model {
  trainer::Checkpoint ckpt;
};

struct mvb_report {
  retrieval::RecallReport r;
  std::vector<std::pair<int, double>> rows;

  explicit mvb_report(retrieval::RecallReport report) : r(std::move(report)) {
    rows.assign(r.recall.begin(), r.recall.end());
  }
};

struct mvb_history {
  trainer::TrainHistory h;
  std::vector<mvb_report> evals;
};

struct mvb_index {
  retrieval::RetrievalIndex idx;
};

struct mvb_result {
  retrieval::RetrievalResult r;
};

namespace {

thread_local std::string g_last_error;

mvb_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return MVB_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return MVB_ERR_IO;
    case ErrorCode::kBadMagic: return MVB_ERR_BAD_MAGIC;
    case ErrorCode::kUnsupportedVersion: return MVB_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::kTruncated: return MVB_ERR_TRUNCATED;
    case ErrorCode::kTrailingData: return MVB_ERR_TRAILING_DATA;
    case ErrorCode::kDuplicateId: return MVB_ERR_DUPLICATE_ID;
    case ErrorCode::kNonFinite: return MVB_ERR_NON_FINITE;
    case ErrorCode::kNoCommonIds: return MVB_ERR_NO_COMMON_IDS;
    case ErrorCode::kShapeMismatch: return MVB_ERR_SHAPE_MISMATCH;
    case ErrorCode::kZeroNorm: return MVB_ERR_ZERO_NORM;
    case ErrorCode::kFormat: return MVB_ERR_FORMAT;
    case ErrorCode::kDivergence: return MVB_ERR_DIVERGENCE;
  }
  return MVB_ERR_INTERNAL;
}

template <typename F>
mvb_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MVB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MVB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MVB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MVB_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

retrieval::Direction to_direction(mvb_direction d) {
  switch (d) {
    case MVB_VIDEO_TO_AUDIO: return retrieval::Direction::kVideoToAudio;
    case MVB_AUDIO_TO_VIDEO: return retrieval::Direction::kAudioToVideo;
  }
  fail(ErrorCode::kInvalidArgument, "unknown retrieval direction");
}

borderkit::BorderParams to_params(const mvb_border_params* p) {
  borderkit::BorderParams out;
  if (p == nullptr) return out;
  out.borderless_std = p->borderless_std;
  out.edge_magnitude = p->edge_magnitude;
  out.edge_fraction = p->edge_fraction;
  out.black_threshold = p->black_threshold;
  out.contrast_margin = p->contrast_margin;
  out.nms_radius = p->nms_radius;
  out.search_fraction = p->search_fraction;
  out.min_area_fraction = p->min_area_fraction;
  return out;
}

void write_rect(const borderkit::CropRect& r, mvb_crop_rect* out) {
  out->left = r.left;
  out->top = r.top;
  out->right = r.right;
  out->bottom = r.bottom;
}

}  // namespace

extern "C" {

const char* mvb_version(void) { return "1.0.0"; }

const char* mvb_status_name(mvb_status status) {
  switch (status) {
    case MVB_OK: return "ok";
    case MVB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MVB_ERR_IO: return "i/o error";
    case MVB_ERR_BAD_MAGIC: return "bad magic";
    case MVB_ERR_UNSUPPORTED_VERSION: return "unsupported version";
    case MVB_ERR_TRUNCATED: return "truncated";
    case MVB_ERR_TRAILING_DATA: return "trailing data";
    case MVB_ERR_DUPLICATE_ID: return "duplicate id";
    case MVB_ERR_NON_FINITE: return "non-finite value";
    case MVB_ERR_NO_COMMON_IDS: return "no common ids";
    case MVB_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case MVB_ERR_ZERO_NORM: return "zero norm";
    case MVB_ERR_FORMAT: return "format error";
    case MVB_ERR_DIVERGENCE: return "divergence";
    case MVB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mvb_last_error(void) { return g_last_error.c_str(); }

void mvb_string_free(char* s) { std::free(s); }

uint64_t mvb_derive_seed(uint64_t seed, const char* label) {
  return derive_seed(seed, label == nullptr ? "" : label);
}

// ---- embeddings -----------------------------------------------------------

mvb_status mvb_embeddings_create(const char* const* ids, size_t count, uint32_t dim,
                                 const float* data, mvb_embeddings** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    require(count == 0 || (ids != nullptr && data != nullptr), "null ids or data");
    std::vector<std::string> names;
    names.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(ids[i] != nullptr, "null id");
      names.emplace_back(ids[i]);
    }
    std::vector<float> values(data, data + count * static_cast<size_t>(dim));
    *out = new mvb_embeddings{embedio::EmbeddingMatrix(std::move(names), dim, std::move(values))};
  });
}

mvb_status mvb_embeddings_load(const char* path, mvb_embeddings** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new mvb_embeddings{embedio::load_embeddings(path)};
  });
}

mvb_status mvb_embeddings_save(const mvb_embeddings* m, const char* path) {
  return guarded([&] {
    require(m != nullptr && path != nullptr, "null argument");
    embedio::save_embeddings(m->m, path);
  });
}

void mvb_embeddings_free(mvb_embeddings* m) { delete m; }

size_t mvb_embeddings_count(const mvb_embeddings* m) { return m == nullptr ? 0 : m->m.count(); }

uint32_t mvb_embeddings_dim(const mvb_embeddings* m) { return m == nullptr ? 0 : m->m.dim(); }

const char* mvb_embeddings_id(const mvb_embeddings* m, size_t row) {
  if (m == nullptr || row >= m->m.count()) return nullptr;
  return m->m.ids()[row].c_str();
}

const float* mvb_embeddings_row(const mvb_embeddings* m, size_t row) {
  if (m == nullptr || row >= m->m.count()) return nullptr;
  return m->m.row(row).data();
}

mvb_status mvb_embeddings_find(const mvb_embeddings* m, const char* id, size_t* row) {
  return guarded([&] {
    require(m != nullptr && id != nullptr && row != nullptr, "null argument");
    const auto& ids = m->m.ids();
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) {
        *row = i;
        return;
      }
    }
    fail(ErrorCode::kInvalidArgument, std::string("id not found: ") + id);
  });
}

// ---- datasets -------------------------------------------------------------

mvb_status mvb_dataset_pair(const mvb_embeddings* video, const mvb_embeddings* audio,
                            mvb_dataset** out) {
  return guarded([&] {
    require(video != nullptr && audio != nullptr && out != nullptr, "null argument");
    *out = new mvb_dataset{embedio::pair_by_id(video->m, audio->m)};
  });
}

mvb_status mvb_dataset_load(const char* video_path, const char* audio_path, mvb_dataset** out) {
  return guarded([&] {
    require(video_path != nullptr && audio_path != nullptr && out != nullptr, "null argument");
    const auto video = embedio::load_embeddings(video_path);
    const auto audio = embedio::load_embeddings(audio_path);
    *out = new mvb_dataset{embedio::pair_by_id(video, audio)};
  });
}

mvb_status mvb_dataset_save(const mvb_dataset* d, const char* video_path, const char* audio_path) {
  return guarded([&] {
    require(d != nullptr && video_path != nullptr && audio_path != nullptr, "null argument");
    embedio::save_embeddings(d->d.video(), video_path);
    embedio::save_embeddings(d->d.audio(), audio_path);
  });
}

mvb_status mvb_dataset_split(const mvb_dataset* d, size_t n_val, uint64_t seed,
                             mvb_dataset** train, mvb_dataset** val) {
  return guarded([&] {
    require(d != nullptr && train != nullptr && val != nullptr, "null argument");
    auto split = embedio::split_dataset(d->d, {.n_val = n_val, .seed = seed});
    auto* t = new mvb_dataset{std::move(split.train)};
    try {
      *val = new mvb_dataset{std::move(split.val)};
    } catch (...) {
      delete t;
      throw;
    }
    *train = t;
  });
}

mvb_status mvb_dataset_synthetic(size_t n_pairs, size_t latent_dim, double noise, uint64_t seed,
                                 uint32_t dim, mvb_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new mvb_dataset{trainer::gen_synthetic(n_pairs, latent_dim, noise, seed, dim)};
  });
}

size_t mvb_dataset_count(const mvb_dataset* d) { return d == nullptr ? 0 : d->d.count(); }

const char* mvb_dataset_id(const mvb_dataset* d, size_t row) {
  if (d == nullptr || row >= d->d.count()) return nullptr;
  return d->d.ids()[row].c_str();
}

void mvb_dataset_free(mvb_dataset* d) { delete d; }

// ---- model ----------------------------------------------------------------

void mvb_model_config_default(mvb_model_config* cfg) {
  if (cfg == nullptr) return;
  const trainer::ModelSpec spec;
  cfg->d_in_video = spec.d_in_video;
  cfg->d_in_audio = spec.d_in_audio;
  cfg->d_hid = spec.d_hid;
  cfg->d_out = spec.d_out;
  cfg->temperature = spec.temperature;
  cfg->dropout_p = spec.dropout_p;
  cfg->bn_momentum = spec.bn_momentum;
  cfg->bn_eps = spec.bn_eps;
  cfg->seed = 0;
}

void mvb_train_config_default(mvb_train_config* cfg) {
  if (cfg == nullptr) return;
  const trainer::TrainConfig tc;
  cfg->batch_size = tc.batch_size;
  cfg->epochs = tc.epochs;
  cfg->lr = tc.lr;
  cfg->seed = tc.seed;
  cfg->shuffle = tc.shuffle ? 1 : 0;
  cfg->eval_every = tc.eval_every;
}

mvb_status mvb_model_create(const mvb_model_config* cfg, mvb_model** out) {
  return guarded([&] {
    require(cfg != nullptr && out != nullptr, "null argument");
    trainer::ModelSpec spec;
    spec.d_in_video = cfg->d_in_video;
    spec.d_in_audio = cfg->d_in_audio;
    spec.d_hid = cfg->d_hid;
    spec.d_out = cfg->d_out;
    spec.temperature = cfg->temperature;
    spec.dropout_p = cfg->dropout_p;
    spec.bn_momentum = cfg->bn_momentum;
    spec.bn_eps = cfg->bn_eps;
    auto model = trainer::init_model(spec, cfg->seed);
    auto opt = trainer::OptState::fresh(model);
    trainer::TrainConfig tc;
    tc.seed = cfg->seed;
    *out = new mvb_model{trainer::Checkpoint{std::move(model), std::move(opt), tc}};
  });
}

mvb_status mvb_model_load(const char* path, mvb_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new mvb_model{trainer::load_checkpoint(path)};
  });
}

mvb_status mvb_model_save(const mvb_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "null argument");
    trainer::save_checkpoint(model->ckpt, path);
  });
}

void mvb_model_free(mvb_model* model) { delete model; }

uint64_t mvb_model_step(const mvb_model* model) {
  return model == nullptr ? 0 : model->ckpt.opt.step();
}

double mvb_model_temperature(const mvb_model* model) {
  return model == nullptr ? 0.0 : model->ckpt.model.temperature;
}

mvb_status mvb_model_train(mvb_model* model, const mvb_dataset* train, const mvb_train_config* cfg,
                           const mvb_dataset* monitor, mvb_history** out) {
  return guarded([&] {
    require(model != nullptr && train != nullptr && cfg != nullptr && out != nullptr,
            "null argument");
    trainer::TrainConfig tc;
    tc.batch_size = cfg->batch_size;
    tc.epochs = cfg->epochs;
    tc.lr = cfg->lr;
    tc.seed = cfg->seed;
    tc.shuffle = cfg->shuffle != 0;
    tc.eval_every = cfg->eval_every;
    tc.validate();

    trainer::EvalHook hook;
    if (monitor != nullptr) {
      const embedio::PairedDataset* held_out = &monitor->d;
      hook = [held_out](const trainer::Model& m) {
        const int ks[] = {1, 5, 10};
        return retrieval::recall_at_k(m, *held_out, ks, retrieval::Direction::kVideoToAudio);
      };
    }
    // Train on copies so a divergence leaves the caller's model untouched.
    trainer::Model working = model->ckpt.model;
    trainer::OptState opt = model->ckpt.opt;
    auto history = std::make_unique<mvb_history>();
    history->h = trainer::train(working, opt, train->d, tc, hook);
    for (const auto& snap : history->h.evals) history->evals.emplace_back(snap.report);
    model->ckpt.model = std::move(working);
    model->ckpt.opt = std::move(opt);
    model->ckpt.config = tc;
    *out = history.release();
  });
}

size_t mvb_history_steps(const mvb_history* h) { return h == nullptr ? 0 : h->h.losses.size(); }

double mvb_history_loss(const mvb_history* h, size_t step) {
  if (h == nullptr || step >= h->h.losses.size()) return 0.0;
  return h->h.losses[step];
}

size_t mvb_history_eval_count(const mvb_history* h) { return h == nullptr ? 0 : h->evals.size(); }

const mvb_report* mvb_history_eval(const mvb_history* h, size_t i, uint32_t* epoch) {
  if (h == nullptr || i >= h->evals.size()) return nullptr;
  if (epoch != nullptr) *epoch = h->h.evals[i].epoch;
  return &h->evals[i];
}

char* mvb_history_tsv(const mvb_history* h) {
  if (h == nullptr) return nullptr;
  return dup_string(trainer::format_loss_history(h->h));
}

void mvb_history_free(mvb_history* h) { delete h; }

mvb_status mvb_model_project(const mvb_model* model, const mvb_embeddings* raw,
                             mvb_modality modality, mvb_embeddings** out) {
  return guarded([&] {
    require(model != nullptr && raw != nullptr && out != nullptr, "null argument");
    require(modality == MVB_MODALITY_VIDEO || modality == MVB_MODALITY_AUDIO, "unknown modality");
    const auto m = modality == MVB_MODALITY_VIDEO ? binder::Modality::kVideo
                                                  : binder::Modality::kAudio;
    const Mat<float> y = binder::project(model->ckpt.model, retrieval::to_batch(raw->m), m);
    std::vector<float> data(y.data(), y.data() + y.size());
    *out = new mvb_embeddings{embedio::EmbeddingMatrix(raw->m.ids(),
                                                       static_cast<uint32_t>(y.cols()),
                                                       std::move(data))};
  });
}

// ---- evaluation -----------------------------------------------------------

mvb_status mvb_model_evaluate(const mvb_model* model, const mvb_dataset* val, const int* ks,
                              size_t n_ks, mvb_direction direction, mvb_report** out) {
  return guarded([&] {
    require(model != nullptr && val != nullptr && out != nullptr, "null argument");
    require(n_ks > 0 && ks != nullptr, "at least one K is required");
    const auto report = retrieval::recall_at_k(model->ckpt.model, val->d,
                                               std::span<const int>(ks, n_ks),
                                               to_direction(direction));
    *out = new mvb_report(report);
  });
}

size_t mvb_report_size(const mvb_report* r) { return r == nullptr ? 0 : r->rows.size(); }

int mvb_report_k(const mvb_report* r, size_t i) {
  if (r == nullptr || i >= r->rows.size()) return 0;
  return r->rows[i].first;
}

double mvb_report_recall(const mvb_report* r, size_t i) {
  if (r == nullptr || i >= r->rows.size()) return 0.0;
  return r->rows[i].second;
}

size_t mvb_report_queries(const mvb_report* r) { return r == nullptr ? 0 : r->r.queries; }

char* mvb_report_tsv(const mvb_report* r) {
  if (r == nullptr) return nullptr;
  return dup_string(retrieval::format_tsv(r->r));
}

char* mvb_report_record(const mvb_report* r) {
  if (r == nullptr) return nullptr;
  return dup_string(retrieval::format_record(r->r));
}

void mvb_report_free(mvb_report* r) { delete r; }

// ---- retrieval ------------------------------------------------------------

mvb_status mvb_index_build(const mvb_embeddings* projected, mvb_index** out) {
  return guarded([&] {
    require(projected != nullptr && out != nullptr, "null argument");
    *out = new mvb_index{retrieval::build_index(projected->m)};
  });
}

void mvb_index_free(mvb_index* idx) { delete idx; }

mvb_status mvb_index_query(const mvb_index* idx, const float* query, size_t dim, size_t k,
                           mvb_result** out) {
  return guarded([&] {
    require(idx != nullptr && query != nullptr && out != nullptr, "null argument");
    *out = new mvb_result{retrieval::retrieve_topk(idx->idx, std::span<const float>(query, dim), k)};
  });
}

size_t mvb_result_count(const mvb_result* r) { return r == nullptr ? 0 : r->r.hits.size(); }

const char* mvb_result_id(const mvb_result* r, size_t i) {
  if (r == nullptr || i >= r->r.hits.size()) return nullptr;
  return r->r.hits[i].id.c_str();
}

float mvb_result_score(const mvb_result* r, size_t i) {
  if (r == nullptr || i >= r->r.hits.size()) return 0.0F;
  return r->r.hits[i].score;
}

void mvb_result_free(mvb_result* r) { delete r; }

// ---- borders --------------------------------------------------------------

void mvb_border_params_default(mvb_border_params* p) {
  if (p == nullptr) return;
  const borderkit::BorderParams d;
  p->borderless_std = d.borderless_std;
  p->edge_magnitude = d.edge_magnitude;
  p->edge_fraction = d.edge_fraction;
  p->black_threshold = d.black_threshold;
  p->contrast_margin = d.contrast_margin;
  p->nms_radius = d.nms_radius;
  p->search_fraction = d.search_fraction;
  p->min_area_fraction = d.min_area_fraction;
}

mvb_status mvb_crop_detect_gray(const uint8_t* const* frames, size_t n, int32_t width,
                                int32_t height, const mvb_border_params* params,
                                mvb_crop_rect* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(n > 0 && frames != nullptr, "at least one frame is required");
    const size_t px = static_cast<size_t>(width > 0 ? width : 0) * (height > 0 ? height : 0);
    std::vector<borderkit::GrayImage> imgs;
    imgs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      require(frames[i] != nullptr, "null frame");
      imgs.emplace_back(width, height, std::vector<std::uint8_t>(frames[i], frames[i] + px));
    }
    write_rect(borderkit::detect_crop_rect(imgs, to_params(params)), out);
  });
}

mvb_status mvb_crop_detect_files(const char* const* paths, size_t n,
                                 const mvb_border_params* params, mvb_crop_rect* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(n > 0 && paths != nullptr, "at least one frame is required");
    std::vector<borderkit::GrayImage> imgs;
    imgs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      require(paths[i] != nullptr, "null path");
      imgs.push_back(borderkit::to_luma(borderkit::read_pnm(paths[i])));
      if (imgs.back().width != imgs.front().width || imgs.back().height != imgs.front().height) {
        fail(ErrorCode::kShapeMismatch, std::string(paths[i]) + ": frame size differs from the first frame");
      }
    }
    write_rect(borderkit::detect_crop_rect(imgs, to_params(params)), out);
  });
}

mvb_status mvb_image_info(const char* path, int32_t* width, int32_t* height, int32_t* channels) {
  return guarded([&] {
    require(path != nullptr, "null path");
    const auto img = borderkit::read_pnm(path);
    std::visit(
        [&](const auto& im) {
          if (width != nullptr) *width = im.width;
          if (height != nullptr) *height = im.height;
        },
        img);
    if (channels != nullptr) *channels = std::holds_alternative<borderkit::GrayImage>(img) ? 1 : 3;
  });
}

mvb_status mvb_crop_apply_file(const char* in_path, const mvb_crop_rect* rect,
                               const char* out_path) {
  return guarded([&] {
    require(in_path != nullptr && rect != nullptr && out_path != nullptr, "null argument");
    const borderkit::CropRect r{rect->left, rect->top, rect->right, rect->bottom};
    borderkit::write_pnm(borderkit::apply_crop(borderkit::read_pnm(in_path), r), out_path);
  });
}

}  // extern "C"
