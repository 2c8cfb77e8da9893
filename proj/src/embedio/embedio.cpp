// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#include "embedio/embedio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace mvbind::embedio {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'B', 'E'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 20;

bool ends_with_tsv(const std::string& path) {
  constexpr std::string_view ext = ".tsv";
  return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::uint32_t dim,
                                 std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) fail(ErrorCode::kInvalidArgument, "embedding dim must be positive");
  if (data_.size() != ids_.size() * dim_) {
    fail(ErrorCode::kShapeMismatch, "embedding data holds " + std::to_string(data_.size()) +
                                        " values, expected " + std::to_string(ids_.size()) +
                                        " x " + std::to_string(dim_));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (id.size() > kMaxIdBytes) {
      fail(ErrorCode::kInvalidArgument, "id longer than 65535 bytes");
    }
    if (!seen.insert(id).second) fail(ErrorCode::kDuplicateId, "duplicate id '" + id + "'");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      fail(ErrorCode::kNonFinite, "non-finite value in row '" + ids_[i / dim_] + "'");
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(rows.size());
  data.reserve(rows.size() * dim_);
  for (std::size_t r : rows) {
    ids.push_back(ids_.at(r));
    auto src = row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(std::move(ids), dim_, std::move(data));
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  // Bitwise comparison: -0.0 and 0.0 are distinct here.
  return dim_ == other.dim_ && ids_ == other.ids_ && data_.size() == other.data_.size() &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

PairedDataset::PairedDataset(EmbeddingMatrix video, EmbeddingMatrix audio)
    : video_(std::move(video)), audio_(std::move(audio)) {
  if (video_.count() != audio_.count()) {
    fail(ErrorCode::kShapeMismatch, "paired dataset needs equal row counts");
  }
  if (video_.dim() != audio_.dim()) {
    fail(ErrorCode::kShapeMismatch, "paired dataset needs equal video/audio dims");
  }
  if (video_.ids() != audio_.ids()) {
    fail(ErrorCode::kInvalidArgument, "paired dataset ids differ between modalities");
  }
}

PairedDataset PairedDataset::select(std::span<const std::size_t> rows) const {
  return PairedDataset(video_.select(rows), audio_.select(rows));
}

std::vector<unsigned char> encode_binary(const EmbeddingMatrix& m) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(m.dim());
  w.put<std::uint64_t>(m.count());
  for (const auto& id : m.ids()) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    w.put_bytes(id);
  }
  w.put_span(m.data());
  return w.bytes();
}

EmbeddingMatrix decode_binary(std::span<const unsigned char> bytes) {
  io::ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "bad magic (expected MVBE)");
  }
  r.get_string(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) {
    fail(ErrorCode::kUnsupportedVersion, "unsupported version " + std::to_string(version));
  }
  const auto dim = r.get<std::uint32_t>("dim");
  const auto count = r.get<std::uint64_t>("count");
  if (dim == 0) fail(ErrorCode::kFormat, "header declares dim 0");

  // Every row needs at least a 2-byte id prefix plus its floats; reject
  // impossible counts before allocating for them.
  const std::uint64_t min_row_bytes = 2 + std::uint64_t{dim} * sizeof(float);
  if (count > r.remaining() / min_row_bytes) {
    fail(ErrorCode::kTruncated, "truncated payload: header declares " + std::to_string(count) +
                                    " rows of dim " + std::to_string(dim));
  }

  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("id length");
    ids.push_back(r.get_string(len, "id"));
  }
  const std::size_t values = count * dim;
  if (r.remaining() < values * sizeof(float)) {
    fail(ErrorCode::kTruncated, "truncated payload: data section is short");
  }
  if (r.remaining() > values * sizeof(float)) {
    fail(ErrorCode::kTrailingData, "trailing bytes after data section");
  }
  std::vector<float> data(values);
  r.get_span(std::span<float>(data), "data");
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

std::string encode_tsv(const EmbeddingMatrix& m) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < m.count(); ++i) {
    out += m.ids()[i];
    for (float v : m.row(i)) {
      out += '\t';
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

EmbeddingMatrix decode_tsv(std::string_view text) {
  std::vector<std::string> ids;
  std::vector<float> data;
  std::uint32_t dim = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      fail(ErrorCode::kFormat, "TSV line " + std::to_string(line_no) + " has no values");
    }
    ids.emplace_back(line.substr(0, tab));
    std::string_view rest = line.substr(tab + 1);
    std::uint32_t fields = 0;
    while (true) {
      const auto next = rest.find('\t');
      std::string_view field = rest.substr(0, next);
      float v = 0.0F;
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        fail(ErrorCode::kFormat, "TSV line " + std::to_string(line_no) + ": bad number '" +
                                     std::string(field) + "'");
      }
      data.push_back(v);
      ++fields;
      if (next == std::string_view::npos) break;
      rest = rest.substr(next + 1);
    }
    if (dim == 0) {
      dim = fields;
    } else if (fields != dim) {
      fail(ErrorCode::kShapeMismatch, "TSV line " + std::to_string(line_no) + " has " +
                                          std::to_string(fields) + " values, expected " +
                                          std::to_string(dim));
    }
  }
  if (ids.empty()) fail(ErrorCode::kFormat, "TSV file holds no rows, dimension is unknown");
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  const auto bytes = io::read_file(path);
  if (ends_with_tsv(path)) {
    return decode_tsv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  return decode_binary(bytes);
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  if (ends_with_tsv(path)) {
    const auto text = encode_tsv(m);
    io::write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
  } else {
    io::write_file(path, encode_binary(m));
  }
}

PairedDataset pair_by_id(const EmbeddingMatrix& video, const EmbeddingMatrix& audio) {
  std::vector<std::size_t> vorder(video.count());
  std::vector<std::size_t> aorder(audio.count());
  std::iota(vorder.begin(), vorder.end(), 0);
  std::iota(aorder.begin(), aorder.end(), 0);
  auto by_id = [](const EmbeddingMatrix& m) {
    return [&m](std::size_t a, std::size_t b) { return m.ids()[a] < m.ids()[b]; };
  };
  std::sort(vorder.begin(), vorder.end(), by_id(video));
  std::sort(aorder.begin(), aorder.end(), by_id(audio));

  std::vector<std::size_t> vrows;
  std::vector<std::size_t> arows;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < vorder.size() && j < aorder.size()) {
    const auto& vid = video.ids()[vorder[i]];
    const auto& aid = audio.ids()[aorder[j]];
    if (vid < aid) {
      ++i;
    } else if (aid < vid) {
      ++j;
    } else {
      vrows.push_back(vorder[i++]);
      arows.push_back(aorder[j++]);
    }
  }
  if (vrows.empty()) fail(ErrorCode::kNoCommonIds, "no common ids between video and audio");
  return PairedDataset(video.select(vrows), audio.select(arows));
}

Split split_dataset(const PairedDataset& d, const SplitSpec& spec) {
  if (spec.n_val > d.count()) {
    fail(ErrorCode::kInvalidArgument, "n_val " + std::to_string(spec.n_val) +
                                          " exceeds dataset size " + std::to_string(d.count()));
  }
  std::vector<std::size_t> order(d.count());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(spec.n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return Split{d.select(train), d.select(val)};
}

}  // namespace mvbind::embedio
