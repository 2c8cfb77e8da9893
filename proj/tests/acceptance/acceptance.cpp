// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks AC1-AC8. Prints one [PASS]/[FAIL] line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "binder/binder.hpp"
#include "borderkit/borderkit.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "embedio/embedio.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "pipeline_check.hpp"
#include "retrieval/retrieval.hpp"
#include "trainer/trainer.hpp"

using namespace mvbind;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

int failures = 0;

void report(const char* id, const char* title, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.note(std::string("exception: ") + e.what());
  }
  if (!v.pass) ++failures;
  std::printf("[%s] %s %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("item" + std::to_string(1000 + i));
  return ids;
}

Mat<float> pooled_rows(Rng& rng, Eigen::Index n, Eigen::Index dim, std::size_t pool) {
  const Mat<float> base = testing::random_mat<float>(rng, static_cast<Eigen::Index>(pool), dim);
  Mat<float> out(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = base.row(static_cast<Eigen::Index>(rng.below(pool)));
  return out;
}

bool monotone(const retrieval::RecallReport& r) {
  double prev = -1.0;
  for (const auto& [k, v] : r.recall) {
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

const std::vector<int> kKs{1, 5, 10};
constexpr std::uint64_t kSeed = 0;

// The synthetic run shared by AC3, AC7 and AC8; mirrors the CLI's
// gen-synthetic and train on their defaults.
struct SyntheticRun {
  embedio::Split split;
  trainer::Model untrained;
  trainer::Model trained;
  trainer::OptState opt;
  trainer::TrainConfig cfg;
  double train_seconds = 0.0;
};

embedio::Split synthetic_split(std::uint64_t seed) {
  const auto all = trainer::gen_synthetic(2500, 32, 0.1, derive_seed(seed, "synthetic"));
  return embedio::split_dataset(all, {500, derive_seed(seed, "split")});
}

SyntheticRun run_synthetic(std::uint64_t seed) {
  auto split = synthetic_split(seed);
  trainer::Model model = trainer::init_model(trainer::ModelSpec{}, seed);
  SyntheticRun run{std::move(split), model, model, trainer::OptState::fresh(model), {}, 0.0};
  run.cfg.seed = seed;
  const auto t0 = Clock::now();
  trainer::train(run.trained, run.opt, run.split.train, run.cfg);
  run.train_seconds = seconds_since(t0);
  return run;
}

}  // namespace

int main() {
  std::printf("MVBind acceptance checks\n");

  report("AC1", "gradient correctness", [] {
    Verdict v;
    const auto t0 = Clock::now();
    testing::GradReport agg;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      agg.absorb(testing::check_pipeline(seed, 5, 1e-4, testing::Scheme::kRichardson).report);
    }
    const double elapsed = seconds_since(t0);
    v.note("16/8/4 model, batch 5, 5 seeds, " + std::to_string(agg.checked) + " coordinates (" +
           std::to_string(agg.skipped) + " on ReLU kinks skipped), max rel err " +
           fmt("%.2e", agg.max_rel_err));
    v.require(agg.max_rel_err < 1e-4, "max rel err < 1e-4 (worst " + agg.worst + ")");
    v.require(agg.skipped * 20 < agg.checked, "kink skips under 5%");
    v.require(elapsed < 10.0, "runtime < 10 s, got " + fmt("%.2f s", elapsed));
    return v;
  });

  report("AC2", "loss oracles", [] {
    Verdict v;
    Mat<double> one(1, 1);
    one << 0.42;
    const double l1 = binder::info_nce_loss(one, 0.07);
    const double l2 = binder::info_nce_loss(Mat<double>(Mat<double>::Identity(2, 2)), 1.0);
    const double l4 = binder::info_nce_loss(Mat<double>(Mat<double>::Constant(4, 4, 0.3)), 0.07);
    v.note("N=1 " + fmt("%.17g", l1) + ", N=2 " + fmt("%.9f", l2) + ", N=4 " + fmt("%.12f", l4));
    v.require(l1 == 0.0, "N=1 loss is exactly 0");
    v.require(std::abs(l2 - 0.313262) <= 1e-6, "N=2 identity, tau=1 within 1e-6 of 0.313262");
    v.require(std::abs(l4 - std::log(4.0)) <= 1e-9, "N=4 constant within 1e-9 of ln 4");
    return v;
  });

  const auto ac3_start = Clock::now();
  SyntheticRun run = run_synthetic(kSeed);
  const double ac3_seconds = seconds_since(ac3_start);

  report("AC3", "synthetic binding", [&] {
    Verdict v;
    const double chance = 1.0 / 500.0;
    const auto before =
        retrieval::recall_at_k(run.untrained, run.split.val, kKs, retrieval::Direction::kVideoToAudio);
    const auto after =
        retrieval::recall_at_k(run.trained, run.split.val, kKs, retrieval::Direction::kVideoToAudio);
    const double r1 = after.recall.at(1), r10 = after.recall.at(10), u1 = before.recall.at(1);
    v.note(std::to_string(run.split.train.count()) + "/" + std::to_string(run.split.val.count()) +
           " split, " + std::to_string(run.opt.step()) + " steps; trained R@1 " + fmt("%.1f%%", 100 * r1) +
           " R@5 " + fmt("%.1f%%", 100 * after.recall.at(5)) + " R@10 " + fmt("%.1f%%", 100 * r10) +
           "; untrained R@1 " + fmt("%.1f%%", 100 * u1) + " R@10 " + fmt("%.1f%%", 100 * before.recall.at(10)));
    v.require(run.split.train.count() == 2000 && run.split.val.count() == 500, "2000/500 split");
    v.require(r1 >= 20 * chance, "R@1 >= 20x chance (4.0%)");
    v.require(r1 >= 5 * u1, "R@1 >= 5x untrained R@1");
    v.require(r10 >= 50 * chance, "R@10 >= 50x chance (10.0%)");
    v.require(ac3_seconds < 300.0, "runtime < 5 min, got " + fmt("%.1f s", ac3_seconds));
    v.note("data + training " + fmt("%.1f s", ac3_seconds));
    return v;
  });

  report("AC4", "recall harness exactness", [] {
    Verdict v;
    Rng rng(derive_seed(kSeed, "ac4"));
    std::size_t topk_mismatch = 0, recall_mismatch = 0, non_monotone = 0, queries = 0;
    const std::vector<int> ks{1, 2, 5, 10, 50, 200};
    for (int t = 0; t < 50; ++t) {
      const Eigen::Index dim = 4 + static_cast<Eigen::Index>(rng.below(29));
      const bool pooled = t % 2 == 1;
      const Mat<float> q = pooled ? pooled_rows(rng, 200, dim, 30) : testing::random_mat<float>(rng, 200, dim);
      const Mat<float> c = pooled ? pooled_rows(rng, 200, dim, 30) : testing::random_mat<float>(rng, 200, dim);
      auto ids = make_ids(200);
      testing::shuffle(ids, rng);
      const retrieval::RetrievalIndex idx(ids, c);
      std::vector<std::size_t> ranks(200);
      for (Eigen::Index i = 0; i < 200; ++i) {
        const Mat<float> qi = q.row(i);
        const auto want = testing::oracle_topk(ids, c, qi, 10);
        const auto got = retrieval::retrieve_topk(idx, {qi.data(), static_cast<std::size_t>(dim)}, 10);
        std::vector<std::string> got_ids;
        for (const auto& h : got.hits) got_ids.push_back(h.id);
        if (got_ids != want) ++topk_mismatch;
        ranks[static_cast<std::size_t>(i)] = testing::oracle_rank(ids, q, c, i);
        ++queries;
      }
      for (auto d : {retrieval::Direction::kVideoToAudio, retrieval::Direction::kAudioToVideo}) {
        const auto r = retrieval::recall_from_projections(q, c, ids, ks, d);
        if (!monotone(r)) ++non_monotone;
        if (d == retrieval::Direction::kAudioToVideo) continue;
        for (int k : ks) {
          const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                          [k](std::size_t rk) { return rk < static_cast<std::size_t>(k); });
          if (r.recall.at(k) != static_cast<double>(hits) / 200.0) ++recall_mismatch;
        }
      }
    }
    v.note("50 instances x 200 items (half with tied duplicates), " + std::to_string(queries) +
           " top-10 queries: " + std::to_string(topk_mismatch) + " top-K and " +
           std::to_string(recall_mismatch) + " Recall@K mismatches");
    v.require(topk_mismatch == 0, "retrieve_topk equals full sort");
    v.require(recall_mismatch == 0, "recall equals full-sort ranks");
    v.require(non_monotone == 0, "recall monotone in K");
    return v;
  });

  report("AC5", "Otsu and Sobel oracles", [] {
    Verdict v;
    Rng rng(derive_seed(kSeed, "ac5"));
    int otsu_bad = 0, sobel_bad = 0;
    for (int t = 0; t < 100; ++t) {
      const int levels = t % 3 == 0 ? 4 : (t % 3 == 1 ? 16 : 256);
      auto img = testing::random_image(rng, 16, 16, levels);
      if (levels < 256) {
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p * (255 / (levels - 1)));
      }
      if (borderkit::otsu_threshold(img) != testing::otsu_oracle(img)) ++otsu_bad;
    }
    for (int t = 0; t < 100; ++t) {
      const auto img = testing::random_image(rng, 9, 9);
      const auto m = borderkit::sobel_edges(img);
      const auto o = testing::sobel_oracle(img);
      if (!std::equal(m.gx.begin(), m.gx.end(), o.gx.begin(), o.gx.end()) ||
          !std::equal(m.gy.begin(), m.gy.end(), o.gy.begin(), o.gy.end())) {
        ++sobel_bad;
      }
    }
    v.note("Otsu " + std::to_string(100 - otsu_bad) + "/100 16x16, Sobel " + std::to_string(100 - sobel_bad) +
           "/100 9x9 exact");
    v.require(otsu_bad == 0, "Otsu equals exhaustive argmax");
    v.require(sobel_bad == 0, "Sobel equals naive correlation");
    return v;
  });

  report("AC6", "border detection fixture", [] {
    Verdict v;
    Rng seeds(derive_seed(kSeed, "ac6"));
    int clips = 0, bad = 0;
    double slowest = 0.0;
    std::string worst;
    auto run_clip = [&](int w, int h, testing::Borders b) {
      const auto clip = testing::border_clip(w, h, b, seeds.next());
      const auto t0 = Clock::now();
      const auto r = borderkit::detect_crop_rect(clip);
      slowest = std::max(slowest, seconds_since(t0));
      const borderkit::CropRect want{b.left, b.top, w - b.right, h - b.bottom};
      const bool ok = std::abs(r.left - want.left) <= 2 && std::abs(r.top - want.top) <= 2 &&
                      std::abs(r.right - want.right) <= 2 && std::abs(r.bottom - want.bottom) <= 2 &&
                      (b.top + b.bottom + b.left + b.right > 0 || r == borderkit::full_frame(w, h));
      ++clips;
      if (!ok) {
        ++bad;
        worst = std::to_string(w) + "x" + std::to_string(h) + " borders t" + std::to_string(b.top) + " b" +
                std::to_string(b.bottom) + " l" + std::to_string(b.left) + " r" + std::to_string(b.right) +
                " got (" + std::to_string(r.left) + "," + std::to_string(r.top) + "," +
                std::to_string(r.right) + "," + std::to_string(r.bottom) + ")";
      }
    };
    for (int width : {0, 5, 20, 40}) {
      for (const auto& b : {testing::Borders{width, width, 0, 0}, testing::Borders{0, 0, width, width},
                            testing::Borders{width, width, width, width}}) {
        for (int rep = 0; rep < 3; ++rep) run_clip(320, 240, b);
      }
    }
    run_clip(640, 360, {40, 40, 0, 0});
    run_clip(1280, 720, {0, 0, 160, 160});
    int borderless_bad = 0;
    for (int s = 0; s < 3; ++s) {
      std::vector<borderkit::GrayImage> frames;
      for (int f = 0; f < 10; ++f) frames.push_back(testing::uniform_histogram_frame(320, 240, seeds.next()));
      const auto t0 = Clock::now();
      if (borderkit::detect_crop_rect(frames) != borderkit::full_frame(320, 240)) ++borderless_bad;
      slowest = std::max(slowest, seconds_since(t0));
    }
    v.note(std::to_string(clips - bad) + "/" + std::to_string(clips) + " bordered clips within 2 px, " +
           std::to_string(3 - borderless_bad) + "/3 uniform-histogram clips full frame, slowest clip " +
           fmt("%.3f s", slowest));
    v.require(bad == 0, "every side within 2 px (" + worst + ")");
    v.require(borderless_bad == 0, "borderless clips give the full frame");
    v.require(slowest < 5.0, "runtime < 5 s per clip");
    return v;
  });

  report("AC7", "determinism and persistence", [&] {
    Verdict v;
    const auto bytes = trainer::encode_checkpoint({run.trained, run.opt, run.cfg});
    const SyntheticRun again = run_synthetic(kSeed);
    const auto bytes2 = trainer::encode_checkpoint({again.trained, again.opt, again.cfg});
    v.require(bytes == bytes2, "two seeded runs give identical checkpoint bytes");

    const auto dir = std::filesystem::temp_directory_path() / "mvbind_acceptance";
    std::filesystem::create_directories(dir);
    const std::string ckpt_path = (dir / "model.mvbm").string();
    trainer::save_checkpoint({run.trained, run.opt, run.cfg}, ckpt_path);
    const auto loaded = trainer::load_checkpoint(ckpt_path);
    v.require(trainer::encode_checkpoint(loaded) == bytes, "checkpoint round trip is bitwise");
    for (auto d : {retrieval::Direction::kVideoToAudio, retrieval::Direction::kAudioToVideo}) {
      v.require(retrieval::recall_at_k(loaded.model, run.split.val, kKs, d) ==
                    retrieval::recall_at_k(run.trained, run.split.val, kKs, d),
                "eval after load equals eval before save");
    }

    const std::string mvbe_path = (dir / "val_video.mvbe").string();
    embedio::save_embeddings(run.split.val.video(), mvbe_path);
    const auto reread = embedio::load_embeddings(mvbe_path);
    v.require(embedio::encode_binary(reread) == embedio::encode_binary(run.split.val.video()),
              "MVBE round trip is bitwise");
    v.require(std::filesystem::file_size(mvbe_path) == embedio::encode_binary(reread).size(),
              "MVBE file size matches its encoding");
    std::filesystem::remove_all(dir);
    v.note("checkpoint " + std::to_string(bytes.size()) + " bytes reproduced across two seeded runs; "
           "save/load/eval and MVBE round trips exact");
    return v;
  });

  report("AC8", "recall scale invariance", [&] {
    Verdict v;
    const auto& val = run.split.val;
    int changed = 0, checks = 0;
    const std::vector<int> ks{1, 5, 10, 50, 100};
    for (const trainer::Model* m : {&run.untrained, &run.trained}) {
      const Mat<float> pv = binder::project(*m, retrieval::to_batch(val.video()), binder::Modality::kVideo);
      const Mat<float> pa = binder::project(*m, retrieval::to_batch(val.audio()), binder::Modality::kAudio);
      for (auto d : {retrieval::Direction::kVideoToAudio, retrieval::Direction::kAudioToVideo}) {
        const Mat<float>& q = d == retrieval::Direction::kVideoToAudio ? pv : pa;
        const Mat<float>& c = d == retrieval::Direction::kVideoToAudio ? pa : pv;
        const auto base = retrieval::recall_from_projections(q, c, val.ids(), ks, d);
        for (float s : {3.7F, 0.01F, 250.0F}) {
          const Mat<float> qs = q * s, cs = c * s;
          ++checks;
          if (!(retrieval::recall_from_projections(qs, cs, val.ids(), ks, d) == base)) ++changed;
        }
      }
    }
    v.note(std::to_string(checks - changed) + "/" + std::to_string(checks) +
           " rescaled reports (x3.7, x0.01, x250; untrained and trained, both directions) unchanged");
    v.require(changed == 0, "rescaling changes no report");
    return v;
  });

  std::printf("%s: %d of 8 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
