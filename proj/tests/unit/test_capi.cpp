// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library through its C header only.

#include <mvbind/mvbind.h>

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace {

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

std::string owned(char* s) {
  std::string out = s != nullptr ? s : "";
  mvb_string_free(s);
  return out;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mvbind_test_capi_" + name)).string();
}

mvb_model_config small_model_config(uint64_t seed) {
  mvb_model_config cfg;
  mvb_model_config_default(&cfg);
  cfg.d_in_video = 32;
  cfg.d_in_audio = 32;
  cfg.d_hid = 64;
  cfg.d_out = 8;
  cfg.seed = seed;
  return cfg;
}

Dataset synthetic(size_t n, uint64_t seed) {
  mvb_dataset* d = nullptr;
  REQUIRE(mvb_dataset_synthetic(n, 4, 0.1, seed, 32, &d) == MVB_OK);
  return Dataset(d);
}

// Gray clip with black bands above and below a grid of flat cells.
std::vector<std::vector<uint8_t>> letterbox_clip(int w, int h, int band, int frames) {
  std::vector<std::vector<uint8_t>> clip;
  for (int f = 0; f < frames; ++f) {
    std::vector<uint8_t> px(static_cast<size_t>(w * h), 0);
    for (int y = band; y < h - band; ++y) {
      for (int x = 0; x < w; ++x) {
        const int cell = (x * 4 / w) + 4 * ((y - band) * 3 / (h - 2 * band));
        px[static_cast<size_t>(y * w + x)] = static_cast<uint8_t>(80 + (37 * cell + 53 * f) % 150);
      }
    }
    clip.push_back(std::move(px));
  }
  return clip;
}

void write_pgm(const std::string& path, int w, int h, const std::vector<uint8_t>& px) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(mvb_version()) > 0);
  CHECK(std::string(mvb_status_name(MVB_OK)) == "ok");
  CHECK(std::string(mvb_status_name(MVB_ERR_DIVERGENCE)) == "divergence");
  CHECK(mvb_derive_seed(7, "shuffle") == 0x03e77996f9de3cb6ULL);
}

TEST_CASE("embeddings create, query, save and load") {
  const char* ids[] = {"b", "a"};
  const float data[] = {1, 2, 3, 4, 5, 6};
  mvb_embeddings* raw = nullptr;
  REQUIRE(mvb_embeddings_create(ids, 2, 3, data, &raw) == MVB_OK);
  Embeddings m(raw);
  CHECK(mvb_embeddings_count(m.get()) == 2);
  CHECK(mvb_embeddings_dim(m.get()) == 3);
  CHECK(std::string(mvb_embeddings_id(m.get(), 1)) == "a");
  CHECK(mvb_embeddings_row(m.get(), 1)[2] == 6.0F);
  size_t row = 99;
  CHECK(mvb_embeddings_find(m.get(), "a", &row) == MVB_OK);
  CHECK(row == 1);
  CHECK(mvb_embeddings_find(m.get(), "zz", &row) == MVB_ERR_INVALID_ARGUMENT);

  for (const char* ext : {".mvbe", ".tsv"}) {
    const std::string path = temp_path(std::string("emb") + ext);
    REQUIRE(mvb_embeddings_save(m.get(), path.c_str()) == MVB_OK);
    mvb_embeddings* back = nullptr;
    REQUIRE(mvb_embeddings_load(path.c_str(), &back) == MVB_OK);
    Embeddings loaded(back);
    CHECK(mvb_embeddings_count(loaded.get()) == 2);
    CHECK(std::memcmp(mvb_embeddings_row(loaded.get(), 0), data, 3 * sizeof(float)) == 0);
    std::filesystem::remove(path);
  }
}

TEST_CASE("failures report a status and a thread-local message") {
  mvb_embeddings* out = nullptr;
  const std::string missing = temp_path("does_not_exist.mvbe");
  CHECK(mvb_embeddings_load(missing.c_str(), &out) == MVB_ERR_IO);
  CHECK(out == nullptr);
  CHECK(std::string(mvb_last_error()).find(missing) != std::string::npos);

  const char* dup[] = {"x", "x"};
  const float data[] = {1, 2};
  CHECK(mvb_embeddings_create(dup, 2, 1, data, &out) == MVB_ERR_DUPLICATE_ID);
  const float nan_data[] = {std::nanf("")};
  const char* one[] = {"x"};
  CHECK(mvb_embeddings_create(one, 1, 1, nan_data, &out) == MVB_ERR_NON_FINITE);
  CHECK(mvb_embeddings_create(one, 1, 1, nullptr, &out) == MVB_ERR_INVALID_ARGUMENT);
  CHECK(mvb_embeddings_load(nullptr, &out) == MVB_ERR_INVALID_ARGUMENT);
  CHECK(mvb_model_create(nullptr, nullptr) == MVB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("pairing and splitting datasets") {
  const char* vids[] = {"c", "a", "b"};
  const char* aids[] = {"b", "c", "d"};
  const float data[] = {1, 2, 3, 4, 5, 6};
  mvb_embeddings *v = nullptr, *a = nullptr;
  REQUIRE(mvb_embeddings_create(vids, 3, 2, data, &v) == MVB_OK);
  REQUIRE(mvb_embeddings_create(aids, 3, 2, data, &a) == MVB_OK);
  Embeddings ve(v), ae(a);
  mvb_dataset* d = nullptr;
  REQUIRE(mvb_dataset_pair(ve.get(), ae.get(), &d) == MVB_OK);
  Dataset paired(d);
  CHECK(mvb_dataset_count(paired.get()) == 2);

  const char* other[] = {"q"};
  mvb_embeddings* o = nullptr;
  REQUIRE(mvb_embeddings_create(other, 1, 2, data, &o) == MVB_OK);
  Embeddings oe(o);
  mvb_dataset* none = nullptr;
  CHECK(mvb_dataset_pair(ve.get(), oe.get(), &none) == MVB_ERR_NO_COMMON_IDS);

  const auto big = synthetic(50, 1);
  mvb_dataset *tr = nullptr, *va = nullptr;
  REQUIRE(mvb_dataset_split(big.get(), 10, 3, &tr, &va) == MVB_OK);
  Dataset train(tr), val(va);
  CHECK(mvb_dataset_count(train.get()) == 40);
  CHECK(mvb_dataset_count(val.get()) == 10);
}

TEST_CASE("train, evaluate, checkpoint and reload") {
  const auto all = synthetic(300, 11);
  mvb_dataset *tr = nullptr, *va = nullptr;
  REQUIRE(mvb_dataset_split(all.get(), 60, 12, &tr, &va) == MVB_OK);
  Dataset train(tr), val(va);

  const auto mcfg = small_model_config(13);
  mvb_model* raw = nullptr;
  REQUIRE(mvb_model_create(&mcfg, &raw) == MVB_OK);
  Model model(raw);
  CHECK(mvb_model_step(model.get()) == 0);
  CHECK(mvb_model_temperature(model.get()) == doctest::Approx(0.07));

  const int ks[] = {1, 5, 10};
  mvb_report* r0 = nullptr;
  REQUIRE(mvb_model_evaluate(model.get(), val.get(), ks, 3, MVB_VIDEO_TO_AUDIO, &r0) == MVB_OK);
  Report before(r0);

  mvb_train_config tcfg;
  mvb_train_config_default(&tcfg);
  tcfg.batch_size = 40;
  tcfg.epochs = 6;
  tcfg.seed = 14;
  tcfg.eval_every = 3;
  mvb_history* h = nullptr;
  REQUIRE(mvb_model_train(model.get(), train.get(), &tcfg, val.get(), &h) == MVB_OK);
  History hist(h);
  CHECK(mvb_history_steps(hist.get()) == 36);
  CHECK(mvb_model_step(model.get()) == 36);
  REQUIRE(mvb_history_eval_count(hist.get()) == 2);
  uint32_t epoch = 0;
  const mvb_report* snap = mvb_history_eval(hist.get(), 1, &epoch);
  CHECK(epoch == 6);
  CHECK(mvb_report_size(snap) == 3);
  const std::string loss_tsv = owned(mvb_history_tsv(hist.get()));
  CHECK(loss_tsv.rfind("step\tloss\n1\t", 0) == 0);

  mvb_report* r1 = nullptr;
  REQUIRE(mvb_model_evaluate(model.get(), val.get(), ks, 3, MVB_VIDEO_TO_AUDIO, &r1) == MVB_OK);
  Report after(r1);
  CHECK(mvb_report_queries(after.get()) == 60);
  REQUIRE(mvb_report_size(after.get()) == 3);
  CHECK(mvb_report_k(after.get(), 2) == 10);
  CHECK(mvb_report_recall(after.get(), 0) > mvb_report_recall(before.get(), 0));
  CHECK(mvb_report_recall(after.get(), 0) == mvb_report_recall(snap, 0));
  for (size_t i = 1; i < 3; ++i) CHECK(mvb_report_recall(after.get(), i) >= mvb_report_recall(after.get(), i - 1));
  const std::string tsv = owned(mvb_report_tsv(after.get()));
  CHECK(tsv.rfind("K\trecall_pct\n1\t", 0) == 0);
  const std::string rec = owned(mvb_report_record(after.get()));
  CHECK(rec.find("\"queries\":60") != std::string::npos);

  const std::string path = temp_path("model.mvbm");
  REQUIRE(mvb_model_save(model.get(), path.c_str()) == MVB_OK);
  mvb_model* back = nullptr;
  REQUIRE(mvb_model_load(path.c_str(), &back) == MVB_OK);
  Model loaded(back);
  CHECK(mvb_model_step(loaded.get()) == 36);
  mvb_report* r2 = nullptr;
  REQUIRE(mvb_model_evaluate(loaded.get(), val.get(), ks, 3, MVB_VIDEO_TO_AUDIO, &r2) == MVB_OK);
  Report reloaded(r2);
  for (size_t i = 0; i < 3; ++i) CHECK(mvb_report_recall(reloaded.get(), i) == mvb_report_recall(after.get(), i));
  std::filesystem::remove(path);

  const int bad_k[] = {0};
  mvb_report* r3 = nullptr;
  CHECK(mvb_model_evaluate(model.get(), val.get(), bad_k, 1, MVB_VIDEO_TO_AUDIO, &r3) == MVB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("divergence leaves the caller's model untouched") {
  const auto data = synthetic(40, 21);
  auto mcfg = small_model_config(22);
  mcfg.temperature = 1e-5;
  mvb_model* raw = nullptr;
  REQUIRE(mvb_model_create(&mcfg, &raw) == MVB_OK);
  Model model(raw);
  mvb_train_config tcfg;
  mvb_train_config_default(&tcfg);
  tcfg.batch_size = 20;
  tcfg.epochs = 1;
  mvb_history* h = nullptr;
  CHECK(mvb_model_train(model.get(), data.get(), &tcfg, nullptr, &h) == MVB_ERR_DIVERGENCE);
  CHECK(h == nullptr);
  CHECK(mvb_model_step(model.get()) == 0);
  CHECK(std::string(mvb_last_error()).find("diverged") != std::string::npos);
}

TEST_CASE("projection and retrieval") {
  const auto mcfg = small_model_config(31);
  mvb_model* raw = nullptr;
  REQUIRE(mvb_model_create(&mcfg, &raw) == MVB_OK);
  Model model(raw);

  std::vector<std::string> names;
  std::vector<const char*> ids;
  std::vector<float> data;
  for (int i = 0; i < 20; ++i) names.push_back("clip" + std::to_string(i));
  for (const auto& n : names) ids.push_back(n.c_str());
  for (int i = 0; i < 20 * 32; ++i) data.push_back(static_cast<float>(std::sin(0.37 * i + 1.0)));
  mvb_embeddings* e = nullptr;
  REQUIRE(mvb_embeddings_create(ids.data(), 20, 32, data.data(), &e) == MVB_OK);
  Embeddings rawe(e);

  mvb_embeddings* p = nullptr;
  REQUIRE(mvb_model_project(model.get(), rawe.get(), MVB_MODALITY_AUDIO, &p) == MVB_OK);
  Embeddings proj(p);
  CHECK(mvb_embeddings_dim(proj.get()) == 8);
  CHECK(std::string(mvb_embeddings_id(proj.get(), 3)) == "clip3");

  mvb_index* ix = nullptr;
  REQUIRE(mvb_index_build(proj.get(), &ix) == MVB_OK);
  Index index(ix);
  mvb_result* res = nullptr;
  REQUIRE(mvb_index_query(index.get(), mvb_embeddings_row(proj.get(), 7), 8, 5, &res) == MVB_OK);
  Result result(res);
  REQUIRE(mvb_result_count(result.get()) == 5);
  CHECK(std::string(mvb_result_id(result.get(), 0)) == "clip7");
  CHECK(mvb_result_score(result.get(), 0) == doctest::Approx(1.0F).epsilon(1e-6));
  for (size_t i = 1; i < 5; ++i) CHECK(mvb_result_score(result.get(), i) <= mvb_result_score(result.get(), i - 1));

  mvb_result* bad = nullptr;
  CHECK(mvb_index_query(index.get(), mvb_embeddings_row(proj.get(), 0), 7, 5, &bad) == MVB_ERR_SHAPE_MISMATCH);
  mvb_embeddings* wrong = nullptr;
  CHECK(mvb_model_project(model.get(), proj.get(), MVB_MODALITY_VIDEO, &wrong) == MVB_ERR_SHAPE_MISMATCH);
}

TEST_CASE("border detection on raw gray frames and files") {
  const int w = 96, h = 72, band = 12;
  const auto clip = letterbox_clip(w, h, band, 8);
  std::vector<const uint8_t*> frames;
  for (const auto& f : clip) frames.push_back(f.data());
  mvb_border_params params;
  mvb_border_params_default(&params);
  mvb_crop_rect rect{};
  REQUIRE(mvb_crop_detect_gray(frames.data(), frames.size(), w, h, &params, &rect) == MVB_OK);
  CHECK(std::abs(rect.top - band) <= 2);
  CHECK(std::abs(rect.bottom - (h - band)) <= 2);
  CHECK(rect.left == 0);
  CHECK(rect.right == w);

  std::vector<std::string> paths;
  for (size_t i = 0; i < clip.size(); ++i) {
    paths.push_back(temp_path("frame" + std::to_string(i) + ".pgm"));
    write_pgm(paths.back(), w, h, clip[i]);
  }
  std::vector<const char*> cpaths;
  for (const auto& p : paths) cpaths.push_back(p.c_str());
  mvb_crop_rect from_files{};
  REQUIRE(mvb_crop_detect_files(cpaths.data(), cpaths.size(), nullptr, &from_files) == MVB_OK);
  CHECK(from_files.top == rect.top);
  CHECK(from_files.bottom == rect.bottom);

  int32_t iw = 0, ih = 0, ch = 0;
  REQUIRE(mvb_image_info(cpaths[0], &iw, &ih, &ch) == MVB_OK);
  CHECK(iw == w);
  CHECK(ih == h);
  CHECK(ch == 1);
  const std::string cropped = temp_path("cropped.pgm");
  REQUIRE(mvb_crop_apply_file(cpaths[0], &rect, cropped.c_str()) == MVB_OK);
  REQUIRE(mvb_image_info(cropped.c_str(), &iw, &ih, &ch) == MVB_OK);
  CHECK(iw == rect.right - rect.left);
  CHECK(ih == rect.bottom - rect.top);

  CHECK(mvb_crop_detect_gray(frames.data(), 0, w, h, &params, &rect) == MVB_ERR_INVALID_ARGUMENT);
  const std::string missing = temp_path("nope.pgm");
  const char* bad[] = {missing.c_str()};
  CHECK(mvb_crop_detect_files(bad, 1, nullptr, &rect) == MVB_ERR_IO);
  for (const auto& p : paths) std::filesystem::remove(p);
  std::filesystem::remove(cropped);
}
