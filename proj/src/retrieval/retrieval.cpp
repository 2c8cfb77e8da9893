// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "retrieval/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "common/error.hpp"

namespace mvbind::retrieval {

namespace {

void check_ks(std::span<const int> ks) {
  if (ks.empty()) fail(ErrorCode::kInvalidArgument, "recall needs at least one K");
  for (int k : ks) {
    if (k <= 0) fail(ErrorCode::kInvalidArgument, "recall K must be positive, got " + std::to_string(k));
  }
}

}  // namespace

std::string direction_name(Direction d) {
  return d == Direction::kVideoToAudio ? "video_to_audio" : "audio_to_video";
}

Direction parse_direction(const std::string& text) {
  if (text == "v2a" || text == "video_to_audio") return Direction::kVideoToAudio;
  if (text == "a2v" || text == "audio_to_video") return Direction::kAudioToVideo;
  fail(ErrorCode::kInvalidArgument, "unknown direction '" + text + "' (expected v2a or a2v)");
}

RetrievalIndex::RetrievalIndex(std::vector<std::string> ids, const Mat<float>& vectors)
    : ids_(std::move(ids)) {
  if (static_cast<Eigen::Index>(ids_.size()) != vectors.rows()) {
    fail(ErrorCode::kShapeMismatch, "index ids and vectors disagree in count");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) fail(ErrorCode::kDuplicateId, "duplicate index id '" + id + "'");
  }
  unit_ = binder::l2_normalize_rows(vectors);
}

Mat<float> to_batch(const embedio::EmbeddingMatrix& m) {
  Mat<float> out(static_cast<Eigen::Index>(m.count()), static_cast<Eigen::Index>(m.dim()));
  std::copy(m.data().begin(), m.data().end(), out.data());
  return out;
}

RetrievalIndex build_index(const embedio::EmbeddingMatrix& m) {
  return RetrievalIndex(m.ids(), to_batch(m));
}

RetrievalResult retrieve_topk(const RetrievalIndex& idx, std::span<const float> query, std::size_t k,
                              std::string query_id) {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (idx.count() == 0) fail(ErrorCode::kInvalidArgument, "retrieval index is empty");
  if (query.size() != idx.dim()) {
    fail(ErrorCode::kShapeMismatch, "query has dim " + std::to_string(query.size()) +
                                        ", index has dim " + std::to_string(idx.dim()));
  }
  std::vector<float> unit(query.size());
  binder::normalize_into<float>(query, unit);

  const auto& rows = idx.unit_rows();
  std::vector<float> scores(idx.count());
  for (std::size_t i = 0; i < idx.count(); ++i) {
    std::span<const float> row(rows.data() + i * idx.dim(), idx.dim());
    scores[i] = std::clamp(static_cast<float>(binder::dot<float>(unit, row)), -1.0F, 1.0F);
  }

  std::vector<std::size_t> order(idx.count());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(k, idx.count());
  const auto& ids = idx.ids();
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids[a] < ids[b];
                    });

  RetrievalResult result;
  result.query_id = std::move(query_id);
  result.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) result.hits.push_back({ids[order[i]], scores[order[i]]});
  return result;
}

RecallReport recall_from_projections(const Mat<float>& queries, const Mat<float>& candidates,
                                     const std::vector<std::string>& ids, std::span<const int> ks,
                                     Direction direction) {
  check_ks(ks);
  const auto n = queries.rows();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "recall needs a non-empty validation set");
  if (candidates.rows() != n || static_cast<Eigen::Index>(ids.size()) != n) {
    fail(ErrorCode::kShapeMismatch, "recall: queries, candidates and ids must have equal counts");
  }
  const Mat<float> scores = binder::similarity_matrix(queries, candidates).scores;

  // Rank of the true match = number of candidates ordered ahead of it.
  std::vector<std::size_t> rank(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const float own = scores(i, i);
    std::size_t ahead = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const float s = scores(i, j);
      if (s > own || (s == own && ids[j] < ids[i])) ++ahead;
    }
    rank[i] = ahead;
  }

  RecallReport report;
  report.queries = static_cast<std::size_t>(n);
  report.direction = direction;
  for (int k : ks) {
    const auto hits = std::count_if(rank.begin(), rank.end(),
                                    [k](std::size_t r) { return r < static_cast<std::size_t>(k); });
    report.recall[k] = static_cast<double>(hits) / static_cast<double>(n);
  }
  return report;
}

RecallReport recall_at_k(const binder::BindModel<float>& model, const embedio::PairedDataset& val,
                         std::span<const int> ks, Direction direction) {
  check_ks(ks);
  if (val.count() == 0) fail(ErrorCode::kInvalidArgument, "recall needs a non-empty validation set");
  const Mat<float> video = binder::project(model, to_batch(val.video()), binder::Modality::kVideo);
  const Mat<float> audio = binder::project(model, to_batch(val.audio()), binder::Modality::kAudio);
  if (direction == Direction::kVideoToAudio) {
    return recall_from_projections(video, audio, val.ids(), ks, direction);
  }
  return recall_from_projections(audio, video, val.ids(), ks, direction);
}

std::string format_tsv(const RecallReport& report) {
  std::string out = "K\trecall_pct\n";
  char buf[64];
  for (const auto& [k, r] : report.recall) {
    std::snprintf(buf, sizeof(buf), "%d\t%.1f\n", k, 100.0 * r);
    out += buf;
  }
  return out;
}

std::string format_record(const RecallReport& report) {
  nlohmann::ordered_json j;
  j["direction"] = direction_name(report.direction);
  j["queries"] = report.queries;
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (const auto& [k, r] : report.recall) recall[std::to_string(k)] = r;
  j["recall"] = recall;
  return j.dump();
}

}  // namespace mvbind::retrieval
