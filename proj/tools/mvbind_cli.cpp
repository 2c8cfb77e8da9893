// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// mvbind: command-line front end over the C interface.

#include <mvbind/mvbind.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct Failure {
  mvb_status status;
  std::string message;
};

struct UsageError {
  std::string message;
};

void check(mvb_status st, const std::string& context = {}) {
  if (st == MVB_OK) return;
  std::string msg = mvb_last_error();
  if (!context.empty()) msg = context + ": " + msg;
  throw Failure{st, msg};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Embeddings = std::unique_ptr<mvb_embeddings, Deleter<mvb_embeddings, mvb_embeddings_free>>;
using Dataset = std::unique_ptr<mvb_dataset, Deleter<mvb_dataset, mvb_dataset_free>>;
using Model = std::unique_ptr<mvb_model, Deleter<mvb_model, mvb_model_free>>;
using History = std::unique_ptr<mvb_history, Deleter<mvb_history, mvb_history_free>>;
using Report = std::unique_ptr<mvb_report, Deleter<mvb_report, mvb_report_free>>;
using Index = std::unique_ptr<mvb_index, Deleter<mvb_index, mvb_index_free>>;
using Result = std::unique_ptr<mvb_result, Deleter<mvb_result, mvb_result_free>>;

std::string take_string(char* s) {
  if (s == nullptr) throw Failure{MVB_ERR_INTERNAL, "out of memory"};
  std::string out(s);
  mvb_string_free(s);
  return out;
}

Dataset load_pair(const std::string& video, const std::string& audio) {
  mvb_dataset* d = nullptr;
  check(mvb_dataset_load(video.c_str(), audio.c_str(), &d));
  return Dataset(d);
}

Model load_model(const std::string& path) {
  mvb_model* m = nullptr;
  check(mvb_model_load(path.c_str(), &m));
  return Model(m);
}

mvb_direction parse_direction(const std::string& s) {
  if (s == "v2a" || s == "video_to_audio") return MVB_VIDEO_TO_AUDIO;
  return MVB_AUDIO_TO_VIDEO;
}

const CLI::IsMember kDirections({"v2a", "a2v", "video_to_audio", "audio_to_video"});

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Failure{MVB_ERR_IO, "cannot write " + path};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Failure{MVB_ERR_IO, "cannot create directory " + dir + ": " + ec.message()};
}

// ---- gen-synthetic --------------------------------------------------------

struct GenArgs {
  std::size_t pairs = 2500;
  std::size_t latent = 32;
  double noise = 0.1;
  std::size_t n_val = 500;
  std::uint32_t dim = 1024;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int run_gen(const GenArgs& a) {
  if (a.n_val >= a.pairs) throw UsageError{"--n-val must be below --pairs"};
  mvb_dataset* all = nullptr;
  check(mvb_dataset_synthetic(a.pairs, a.latent, a.noise, mvb_derive_seed(a.seed, "synthetic"),
                              a.dim, &all));
  Dataset full(all);
  mvb_dataset* tr = nullptr;
  mvb_dataset* va = nullptr;
  check(mvb_dataset_split(full.get(), a.n_val, mvb_derive_seed(a.seed, "split"), &tr, &va));
  Dataset train(tr);
  Dataset val(va);
  ensure_dir(a.out);
  const auto p = std::filesystem::path(a.out);
  check(mvb_dataset_save(train.get(), (p / "train_video.mvbe").c_str(),
                         (p / "train_audio.mvbe").c_str()));
  check(mvb_dataset_save(val.get(), (p / "val_video.mvbe").c_str(),
                         (p / "val_audio.mvbe").c_str()));
  std::cerr << "wrote " << mvb_dataset_count(train.get()) << " train and "
            << mvb_dataset_count(val.get()) << " val pairs to " << a.out << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string video;
  std::string audio;
  std::string val_video;
  std::string val_audio;
  std::string init;
  std::string out = "model.mvbm";
  std::string loss_out;
  double tau = 0.07;
  double lr = 1e-3;
  std::uint32_t batch = 128;
  std::uint32_t epochs = 50;
  std::uint32_t eval_every = 0;
  std::uint64_t seed = 0;
  bool no_shuffle = false;
};

int run_train(const TrainArgs& a) {
  Dataset train = load_pair(a.video, a.audio);
  Dataset val;
  if (!a.val_video.empty() || !a.val_audio.empty()) {
    if (a.val_video.empty() || a.val_audio.empty()) {
      throw UsageError{"--val-video and --val-audio go together"};
    }
    val = load_pair(a.val_video, a.val_audio);
  }

  Model model;
  if (!a.init.empty()) {
    model = load_model(a.init);
  } else {
    mvb_model_config mc;
    mvb_model_config_default(&mc);
    mc.temperature = a.tau;
    mc.seed = a.seed;
    mvb_model* m = nullptr;
    check(mvb_model_create(&mc, &m));
    model.reset(m);
  }

  mvb_train_config tc;
  mvb_train_config_default(&tc);
  tc.batch_size = a.batch;
  tc.epochs = a.epochs;
  tc.lr = a.lr;
  tc.seed = a.seed;
  tc.shuffle = a.no_shuffle ? 0 : 1;
  tc.eval_every = val ? a.eval_every : 0;
  mvb_history* h = nullptr;
  check(mvb_model_train(model.get(), train.get(), &tc, val.get(), &h));
  History history(h);

  for (std::size_t i = 0; i < mvb_history_eval_count(history.get()); ++i) {
    std::uint32_t epoch = 0;
    const mvb_report* r = mvb_history_eval(history.get(), i, &epoch);
    std::cerr << "epoch " << epoch;
    for (std::size_t j = 0; j < mvb_report_size(r); ++j) {
      std::fprintf(stderr, " R@%d=%.1f", mvb_report_k(r, j), 100.0 * mvb_report_recall(r, j));
    }
    std::cerr << "\n";
  }

  check(mvb_model_save(model.get(), a.out.c_str()));
  const std::string loss_path = a.loss_out.empty() ? a.out + ".loss.tsv" : a.loss_out;
  write_text(loss_path, take_string(mvb_history_tsv(history.get())));
  const std::size_t steps = mvb_history_steps(history.get());
  std::cerr << "trained " << steps << " steps";
  if (steps > 0) std::fprintf(stderr, ", final loss %.6f", mvb_history_loss(history.get(), steps - 1));
  std::cerr << "; checkpoint " << a.out << ", loss history " << loss_path << "\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string video;
  std::string audio;
  std::vector<int> ks{1, 5, 10};
  std::string direction = "v2a";
  bool json = false;
};

int run_eval(const EvalArgs& a) {
  for (std::size_t i = 0; i < a.ks.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (a.ks[i] == a.ks[j]) throw UsageError{"--k lists " + std::to_string(a.ks[i]) + " twice"};
    }
  }
  Model model = load_model(a.checkpoint);
  Dataset val = load_pair(a.video, a.audio);
  mvb_report* r = nullptr;
  check(mvb_model_evaluate(model.get(), val.get(), a.ks.data(), a.ks.size(),
                           parse_direction(a.direction), &r));
  Report report(r);
  if (a.json) {
    std::cout << take_string(mvb_report_record(report.get())) << "\n";
  } else {
    std::cout << take_string(mvb_report_tsv(report.get()));
  }
  return kExitOk;
}

// ---- retrieve -------------------------------------------------------------

struct RetrieveArgs {
  std::string checkpoint;
  std::string index;
  std::string queries;
  std::string query_id;
  std::string direction = "v2a";
  std::size_t k = 10;
};

int run_retrieve(const RetrieveArgs& a) {
  Model model = load_model(a.checkpoint);
  const mvb_direction dir = parse_direction(a.direction);
  const mvb_modality query_side = dir == MVB_VIDEO_TO_AUDIO ? MVB_MODALITY_VIDEO : MVB_MODALITY_AUDIO;
  const mvb_modality cand_side = dir == MVB_VIDEO_TO_AUDIO ? MVB_MODALITY_AUDIO : MVB_MODALITY_VIDEO;

  mvb_embeddings* raw = nullptr;
  check(mvb_embeddings_load(a.index.c_str(), &raw));
  Embeddings cand_raw(raw);
  mvb_embeddings* proj = nullptr;
  check(mvb_model_project(model.get(), cand_raw.get(), cand_side, &proj), a.index);
  Embeddings cand(proj);
  mvb_index* ix = nullptr;
  check(mvb_index_build(cand.get(), &ix));
  Index index(ix);

  raw = nullptr;
  check(mvb_embeddings_load(a.queries.c_str(), &raw));
  Embeddings q_raw(raw);
  proj = nullptr;
  check(mvb_model_project(model.get(), q_raw.get(), query_side, &proj), a.queries);
  Embeddings queries(proj);

  std::vector<std::size_t> rows;
  if (!a.query_id.empty()) {
    std::size_t row = 0;
    check(mvb_embeddings_find(queries.get(), a.query_id.c_str(), &row), a.queries);
    rows.push_back(row);
  } else {
    for (std::size_t i = 0; i < mvb_embeddings_count(queries.get()); ++i) rows.push_back(i);
  }

  std::cout << "query_id\trank\tid\tscore\n";
  const std::uint32_t dim = mvb_embeddings_dim(queries.get());
  for (const std::size_t row : rows) {
    mvb_result* res = nullptr;
    check(mvb_index_query(index.get(), mvb_embeddings_row(queries.get(), row), dim, a.k, &res));
    Result result(res);
    const char* qid = mvb_embeddings_id(queries.get(), row);
    for (std::size_t i = 0; i < mvb_result_count(result.get()); ++i) {
      std::printf("%s\t%zu\t%s\t%.6f\n", qid, i + 1, mvb_result_id(result.get(), i),
                  static_cast<double>(mvb_result_score(result.get(), i)));
    }
  }
  return kExitOk;
}

// ---- crop -----------------------------------------------------------------

struct CropArgs {
  std::vector<std::string> frames;
  std::string list;
  std::string out;
  mvb_border_params params{};
};

std::vector<std::string> read_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{MVB_ERR_IO, "cannot open frame list " + path};
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int run_crop(const CropArgs& a) {
  std::vector<std::string> frames = a.frames;
  if (!a.list.empty()) {
    const auto listed = read_list(a.list);
    frames.insert(frames.end(), listed.begin(), listed.end());
  }
  if (frames.empty()) throw UsageError{"no frames given"};
  std::vector<const char*> paths;
  paths.reserve(frames.size());
  for (const auto& f : frames) paths.push_back(f.c_str());

  mvb_crop_rect rect{};
  check(mvb_crop_detect_files(paths.data(), paths.size(), &a.params, &rect));
  std::int32_t w = 0;
  std::int32_t h = 0;
  check(mvb_image_info(paths.front(), &w, &h, nullptr));

  std::cout << "frame_width\tframe_height\tleft\ttop\tright\tbottom\twidth\theight\n";
  std::cout << w << "\t" << h << "\t" << rect.left << "\t" << rect.top << "\t" << rect.right << "\t"
            << rect.bottom << "\t" << rect.right - rect.left << "\t" << rect.bottom - rect.top
            << "\n";

  if (!a.out.empty()) {
    ensure_dir(a.out);
    for (const auto& f : frames) {
      const auto target = std::filesystem::path(a.out) / std::filesystem::path(f).filename();
      check(mvb_crop_apply_file(f.c_str(), &rect, target.c_str()));
    }
    std::cerr << "wrote " << frames.size() << " cropped frames to " << a.out << "\n";
  }
  return kExitOk;
}

int exit_code_for(mvb_status st) {
  return st == MVB_ERR_DIVERGENCE ? kExitDivergence : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvbind: music-video embedding binding, retrieval and border cropping"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mvb_version());

  const auto unit = CLI::Range(0.0, 1.0);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write synthetic paired train/val MVBE files");
  gen_cmd->add_option("--pairs", gen.pairs, "total pairs")->capture_default_str()->check(CLI::Range(2, 1 << 24));
  gen_cmd->add_option("--latent-dim", gen.latent, "shared latent dimension")->capture_default_str()->check(CLI::Range(1, 1 << 16));
  gen_cmd->add_option("--noise", gen.noise, "per-modality noise scale")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--n-val", gen.n_val, "validation pairs")->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "feature dimension")->capture_default_str()->check(CLI::Range(1, 1 << 16));
  gen_cmd->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train both projection heads");
  train_cmd->add_option("--video", tr.video, "video embeddings (MVBE or .tsv)")->required();
  train_cmd->add_option("--audio", tr.audio, "audio embeddings (MVBE or .tsv)")->required();
  train_cmd->add_option("--val-video", tr.val_video, "held-out video embeddings for monitoring");
  train_cmd->add_option("--val-audio", tr.val_audio, "held-out audio embeddings for monitoring");
  train_cmd->add_option("--eval-every", tr.eval_every, "epochs between monitor evaluations")->capture_default_str();
  train_cmd->add_option("--init", tr.init, "resume from this checkpoint");
  train_cmd->add_option("--out", tr.out, "checkpoint path")->capture_default_str();
  train_cmd->add_option("--loss-out", tr.loss_out, "loss history TSV (default <out>.loss.tsv)");
  train_cmd->add_option("--tau", tr.tau, "temperature")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", tr.batch, "batch size")->capture_default_str()->check(CLI::Range(2U, 1U << 20));
  train_cmd->add_option("--epochs", tr.epochs, "epochs")->capture_default_str()->check(CLI::Range(1U, 1U << 20));
  train_cmd->add_option("--seed", tr.seed, "master seed")->capture_default_str();
  train_cmd->add_flag("--no-shuffle", tr.no_shuffle, "keep the input order every epoch");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "print Recall@K on a paired validation set");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--video", ev.video, "validation video embeddings")->required();
  eval_cmd->add_option("--audio", ev.audio, "validation audio embeddings")->required();
  eval_cmd->add_option("--k", ev.ks, "comma-separated K list")->delimiter(',')->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--direction", ev.direction, "v2a or a2v")->capture_default_str()->check(kDirections);
  eval_cmd->add_flag("--json", ev.json, "print a JSON record instead of TSV");

  RetrieveArgs rt;
  auto* ret_cmd = app.add_subcommand("retrieve", "top-K candidates for query embeddings");
  ret_cmd->add_option("--checkpoint", rt.checkpoint, "model checkpoint")->required();
  ret_cmd->add_option("--index", rt.index, "raw candidate embeddings of the target modality")->required();
  ret_cmd->add_option("--queries", rt.queries, "raw query embeddings (vector file)")->required();
  ret_cmd->add_option("--query-id", rt.query_id, "only this query row");
  ret_cmd->add_option("--direction", rt.direction, "v2a or a2v")->capture_default_str()->check(kDirections);
  ret_cmd->add_option("--k", rt.k, "hits per query")->capture_default_str()->check(CLI::Range(1, 1 << 24));

  CropArgs cr;
  mvb_border_params_default(&cr.params);
  auto* crop_cmd = app.add_subcommand("crop", "detect and remove black borders from a frame sequence");
  crop_cmd->add_option("frames", cr.frames, "PGM/PPM frames in order");
  crop_cmd->add_option("--list", cr.list, "file with one frame path per line");
  crop_cmd->add_option("--out", cr.out, "directory for cropped frames");
  crop_cmd->add_option("--borderless-std", cr.params.borderless_std, "histogram spread below which a frame is borderless")->capture_default_str()->check(CLI::NonNegativeNumber);
  crop_cmd->add_option("--edge-magnitude", cr.params.edge_magnitude, "binary-image gradient threshold")->capture_default_str()->check(CLI::PositiveNumber);
  crop_cmd->add_option("--edge-fraction", cr.params.edge_fraction, "fraction of edge pixels per line")->capture_default_str()->check(unit);
  crop_cmd->add_option("--black-threshold", cr.params.black_threshold, "max mean of a black strip")->capture_default_str()->check(CLI::Range(0, 255));
  crop_cmd->add_option("--contrast-margin", cr.params.contrast_margin, "min inner minus outer mean")->capture_default_str()->check(CLI::Range(0.0, 255.0));
  crop_cmd->add_option("--nms-radius", cr.params.nms_radius, "suppression radius in pixels")->capture_default_str()->check(CLI::Range(0, 1 << 16));
  crop_cmd->add_option("--search-fraction", cr.params.search_fraction, "outer band searched per dimension")->capture_default_str()->check(unit);
  crop_cmd->add_option("--min-area-fraction", cr.params.min_area_fraction, "smallest crop kept")->capture_default_str()->check(unit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*ret_cmd) return run_retrieve(rt);
    if (*crop_cmd) return run_crop(cr);
  } catch (const UsageError& u) {
    std::cerr << "mvbind: " << u.message << "\n";
    return kExitUsage;
  } catch (const Failure& f) {
    std::cerr << "mvbind: " << f.message << "\n";
    return exit_code_for(f.status);
  }
  return kExitUsage;
}
