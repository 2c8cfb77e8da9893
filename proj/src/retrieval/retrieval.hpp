// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "binder/binder.hpp"
#include "common/tensor.hpp"
#include "embedio/embedio.hpp"

namespace mvbind::retrieval {

/// Exhaustive cosine index over projected embeddings. Rows are stored
/// unit-normalized; the index is immutable and safe to query concurrently.
class RetrievalIndex {
 public:
  RetrievalIndex(std::vector<std::string> ids, const Mat<float>& vectors);

  std::size_t count() const { return ids_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(unit_.cols()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Mat<float>& unit_rows() const { return unit_; }

 private:
  std::vector<std::string> ids_;
  Mat<float> unit_;
};

struct Hit {
  std::string id;
  float score = 0.0F;
};

struct RetrievalResult {
  std::string query_id;
  std::vector<Hit> hits;  // scores non-increasing, ties by ascending id
};

enum class Direction { kVideoToAudio, kAudioToVideo };

std::string direction_name(Direction d);
Direction parse_direction(const std::string& text);

struct RecallReport {
  std::map<int, double> recall;  // K -> fraction in [0, 1]
  std::size_t queries = 0;
  Direction direction = Direction::kVideoToAudio;

  bool operator==(const RecallReport&) const = default;
};

RetrievalIndex build_index(const embedio::EmbeddingMatrix& m);

/// Top-min(k, count) candidates by cosine score.
RetrievalResult retrieve_topk(const RetrievalIndex& idx, std::span<const float> query, std::size_t k,
                              std::string query_id = {});

/// Recall@K where query i's ground truth is candidate i. `queries` and
/// `candidates` are projected (not necessarily normalized) embeddings and
/// `ids` names both sides' rows.
RecallReport recall_from_projections(const Mat<float>& queries, const Mat<float>& candidates,
                                     const std::vector<std::string>& ids, std::span<const int> ks,
                                     Direction direction);

/// Projects both sides of `val` in eval mode and ranks every query against
/// all validation candidates of the other modality.
RecallReport recall_at_k(const binder::BindModel<float>& model, const embedio::PairedDataset& val,
                         std::span<const int> ks, Direction direction);

/// Raw embedding rows as a float batch.
Mat<float> to_batch(const embedio::EmbeddingMatrix& m);

/// "K<TAB>recall_pct" header, then one row per K with one decimal.
std::string format_tsv(const RecallReport& report);

/// Single-line JSON record with recall fractions.
std::string format_record(const RecallReport& report);

}  // namespace mvbind::retrieval
