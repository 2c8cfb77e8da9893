// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0
//
// MVBM checkpoint layout (little-endian):
//   "MVBM" | u32 version | f32 tau | u32 d_in_video | u32 d_in_audio | u32 d_hid | u32 d_out
//   video head: W1 b1 gamma beta running_mean running_var W2 b2   (f32, row-major)
//   audio head: same
//   video Adam moments: (m, v) for W1 b1 gamma beta W2 b2
//   audio Adam moments: same
//   u64 step
//   per head (video, audio): f32 bn_momentum | f32 bn_eps | f32 dropout_p
//   u64 seed | u32 batch_size | u32 epochs | f64 lr | u8 shuffle | u32 eval_every

#include <cmath>

#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "trainer/trainer.hpp"

namespace mvbind::trainer {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'B', 'M'};

using Head = prophead::ProjectionHead<float>;
using Grads = prophead::HeadGradients<float>;

template <typename Block>
void put_block(io::ByteWriter& w, const Block& b) {
  w.put_span(std::span<const float>(b.data(), static_cast<std::size_t>(b.size())));
}

template <typename Block>
void get_block(io::ByteReader& r, Block& b, std::string_view what) {
  r.get_span(std::span<float>(b.data(), static_cast<std::size_t>(b.size())), what);
}

void put_head(io::ByteWriter& w, const Head& h) {
  put_block(w, h.w1);
  put_block(w, h.b1);
  put_block(w, h.bn_gamma);
  put_block(w, h.bn_beta);
  put_block(w, h.bn_running_mean);
  put_block(w, h.bn_running_var);
  put_block(w, h.w2);
  put_block(w, h.b2);
}

void get_head(io::ByteReader& r, Head& h, std::uint32_t d_in, std::uint32_t d_hid,
              std::uint32_t d_out) {
  h.w1.resize(d_in, d_hid);
  h.b1.resize(d_hid);
  h.bn_gamma.resize(d_hid);
  h.bn_beta.resize(d_hid);
  h.bn_running_mean.resize(d_hid);
  h.bn_running_var.resize(d_hid);
  h.w2.resize(d_hid, d_out);
  h.b2.resize(d_out);
  get_block(r, h.w1, "W1");
  get_block(r, h.b1, "b1");
  get_block(r, h.bn_gamma, "bn gamma");
  get_block(r, h.bn_beta, "bn beta");
  get_block(r, h.bn_running_mean, "bn running mean");
  get_block(r, h.bn_running_var, "bn running var");
  get_block(r, h.w2, "W2");
  get_block(r, h.b2, "b2");
}

void put_moments(io::ByteWriter& w, const prophead::AdamState<float>& s) {
  put_block(w, s.m.w1);
  put_block(w, s.v.w1);
  put_block(w, s.m.b1);
  put_block(w, s.v.b1);
  put_block(w, s.m.bn_gamma);
  put_block(w, s.v.bn_gamma);
  put_block(w, s.m.bn_beta);
  put_block(w, s.v.bn_beta);
  put_block(w, s.m.w2);
  put_block(w, s.v.w2);
  put_block(w, s.m.b2);
  put_block(w, s.v.b2);
}

void get_moments(io::ByteReader& r, prophead::AdamState<float>& s) {
  get_block(r, s.m.w1, "adam m W1");
  get_block(r, s.v.w1, "adam v W1");
  get_block(r, s.m.b1, "adam m b1");
  get_block(r, s.v.b1, "adam v b1");
  get_block(r, s.m.bn_gamma, "adam m gamma");
  get_block(r, s.v.bn_gamma, "adam v gamma");
  get_block(r, s.m.bn_beta, "adam m beta");
  get_block(r, s.v.bn_beta, "adam v beta");
  get_block(r, s.m.w2, "adam m W2");
  get_block(r, s.v.w2, "adam v W2");
  get_block(r, s.m.b2, "adam m b2");
  get_block(r, s.v.b2, "adam v b2");
}

void check_moment_shapes(const Head& h, const prophead::AdamState<float>& s) {
  for (const Grads* g : {&s.m, &s.v}) {
    if (g->w1.rows() != h.w1.rows() || g->w1.cols() != h.w1.cols() || g->b1.size() != h.b1.size() ||
        g->bn_gamma.size() != h.bn_gamma.size() || g->bn_beta.size() != h.bn_beta.size() ||
        g->w2.rows() != h.w2.rows() || g->w2.cols() != h.w2.cols() || g->b2.size() != h.b2.size()) {
      fail(ErrorCode::kShapeMismatch, "optimizer moments do not match head shapes");
    }
  }
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& model = ckpt.model;
  model.validate();
  if (model.video_head.d_hid() != model.audio_head.d_hid()) {
    fail(ErrorCode::kShapeMismatch, "checkpoint format needs both heads to share d_hid");
  }
  check_moment_shapes(model.video_head, ckpt.opt.video);
  check_moment_shapes(model.audio_head, ckpt.opt.audio);
  if (ckpt.opt.video.step != ckpt.opt.audio.step) {
    fail(ErrorCode::kInvalidArgument, "video and audio optimizer step counters differ");
  }
  if (static_cast<double>(static_cast<float>(model.temperature)) != model.temperature) {
    fail(ErrorCode::kInvalidArgument, "temperature is not representable as float32");
  }

  io::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<float>(static_cast<float>(model.temperature));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.video_head.d_in()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.audio_head.d_in()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.video_head.d_hid()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.video_head.d_out()));
  put_head(w, model.video_head);
  put_head(w, model.audio_head);
  put_moments(w, ckpt.opt.video);
  put_moments(w, ckpt.opt.audio);
  w.put<std::uint64_t>(ckpt.opt.video.step);
  for (const Head* h : {&model.video_head, &model.audio_head}) {
    w.put<float>(h->bn_momentum);
    w.put<float>(h->bn_eps);
    w.put<float>(h->dropout_p);
  }
  w.put<std::uint64_t>(ckpt.config.seed);
  w.put<std::uint32_t>(ckpt.config.batch_size);
  w.put<std::uint32_t>(ckpt.config.epochs);
  w.put<double>(ckpt.config.lr);
  w.put<std::uint8_t>(ckpt.config.shuffle ? 1 : 0);
  w.put<std::uint32_t>(ckpt.config.eval_every);
  return w.bytes();
}

Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "bad magic (expected MVBM)");
  }
  io::ByteReader r(bytes);
  r.get_string(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kUnsupportedVersion, "unsupported version " + std::to_string(version));
  }
  const float tau = r.get<float>("temperature");
  const auto d_in_video = r.get<std::uint32_t>("d_in_video");
  const auto d_in_audio = r.get<std::uint32_t>("d_in_audio");
  const auto d_hid = r.get<std::uint32_t>("d_hid");
  const auto d_out = r.get<std::uint32_t>("d_out");
  if (d_in_video == 0 || d_in_audio == 0 || d_hid == 0 || d_out == 0) {
    fail(ErrorCode::kFormat, "checkpoint declares a zero dimension");
  }
  constexpr std::uint32_t kMaxDim = 1U << 24;
  if (d_in_video > kMaxDim || d_in_audio > kMaxDim || d_hid > kMaxDim || d_out > kMaxDim) {
    fail(ErrorCode::kFormat, "checkpoint declares an implausible dimension");
  }
  // Parameters, then moments (twice the trainable count), all float32.
  auto head_floats = [&](std::uint64_t d_in) {
    return d_in * d_hid + 5ULL * d_hid + std::uint64_t{d_hid} * d_out + d_out;
  };
  auto trainable_floats = [&](std::uint64_t d_in) {
    return d_in * d_hid + 3ULL * d_hid + std::uint64_t{d_hid} * d_out + d_out;
  };
  const std::uint64_t payload_floats = head_floats(d_in_video) + head_floats(d_in_audio) +
                                       2 * trainable_floats(d_in_video) +
                                       2 * trainable_floats(d_in_audio);
  constexpr std::uint64_t trailer_bytes = 8 + 6 * 4 + 8 + 4 + 4 + 8 + 1 + 4;
  const std::uint64_t expected = payload_floats * sizeof(float) + trailer_bytes;
  if (r.remaining() < expected) fail(ErrorCode::kTruncated, "truncated payload in checkpoint");
  if (r.remaining() > expected) fail(ErrorCode::kTrailingData, "trailing bytes after checkpoint");

  Checkpoint ckpt;
  auto& model = ckpt.model;
  model.temperature = tau;
  get_head(r, model.video_head, d_in_video, d_hid, d_out);
  get_head(r, model.audio_head, d_in_audio, d_hid, d_out);
  ckpt.opt = OptState::fresh(model);
  get_moments(r, ckpt.opt.video);
  get_moments(r, ckpt.opt.audio);
  const auto step = r.get<std::uint64_t>("step");
  ckpt.opt.video.step = step;
  ckpt.opt.audio.step = step;
  for (Head* h : {&model.video_head, &model.audio_head}) {
    h->bn_momentum = r.get<float>("bn momentum");
    h->bn_eps = r.get<float>("bn eps");
    h->dropout_p = r.get<float>("dropout p");
  }
  ckpt.config.seed = r.get<std::uint64_t>("seed");
  ckpt.config.batch_size = r.get<std::uint32_t>("batch size");
  ckpt.config.epochs = r.get<std::uint32_t>("epochs");
  ckpt.config.lr = r.get<double>("lr");
  const auto shuffle = r.get<std::uint8_t>("shuffle");
  if (shuffle > 1) fail(ErrorCode::kFormat, "corrupt payload: shuffle flag is not 0/1");
  ckpt.config.shuffle = shuffle == 1;
  ckpt.config.eval_every = r.get<std::uint32_t>("eval_every");

  try {
    model.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("corrupt payload: ") + e.what());
  }
  for (const auto* s : {&ckpt.opt.video, &ckpt.opt.audio}) {
    if (!s->m.all_finite() || !s->v.all_finite()) {
      fail(ErrorCode::kFormat, "corrupt payload: non-finite optimizer moment");
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace mvbind::trainer
