// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Embedding datasets: the MVBE binary container, the TSV interchange format,
// id-based pairing of the two modalities and seeded train/validation splits.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvbind::embedio {

inline constexpr std::size_t kMaxIdBytes = 65535;

/// Named rows of fixed-dimension float vectors. Immutable once constructed;
/// the constructor enforces unique ids, finite values and dim > 0.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::vector<std::string> ids, std::uint32_t dim, std::vector<float> data);

  std::size_t count() const { return ids_.size(); }
  std::uint32_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
  }

  /// Rows selected by index, in the given order.
  EmbeddingMatrix select(std::span<const std::size_t> rows) const;

  bool operator==(const EmbeddingMatrix& other) const;

 private:
  std::vector<std::string> ids_;
  std::uint32_t dim_;
  std::vector<float> data_;
};

/// Row i of video and row i of audio form a ground-truth pair.
class PairedDataset {
 public:
  PairedDataset(EmbeddingMatrix video, EmbeddingMatrix audio);

  std::size_t count() const { return video_.count(); }
  const EmbeddingMatrix& video() const { return video_; }
  const EmbeddingMatrix& audio() const { return audio_; }
  const std::vector<std::string>& ids() const { return video_.ids(); }

  PairedDataset select(std::span<const std::size_t> rows) const;

 private:
  EmbeddingMatrix video_;
  EmbeddingMatrix audio_;
};

struct SplitSpec {
  std::size_t n_val = 0;
  std::uint64_t seed = 0;
};

struct Split {
  PairedDataset train;
  PairedDataset val;
};

/// Binary when the extension is anything but ".tsv".
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& m, const std::string& path);

std::vector<unsigned char> encode_binary(const EmbeddingMatrix& m);
EmbeddingMatrix decode_binary(std::span<const unsigned char> bytes);
std::string encode_tsv(const EmbeddingMatrix& m);
EmbeddingMatrix decode_tsv(std::string_view text);

/// Inner join on id, sorted lexicographically.
PairedDataset pair_by_id(const EmbeddingMatrix& video, const EmbeddingMatrix& audio);

/// Fisher-Yates over indices with Rng(spec.seed); the first n_val shuffled
/// indices become validation. Both parts keep their canonical (input) order.
Split split_dataset(const PairedDataset& d, const SplitSpec& spec);

}  // namespace mvbind::embedio
