// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace tadvit {
namespace {

constexpr char kMagic[4] = {'M', 'V', 'T', 'C'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void uint(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void f32(float value) { uint(std::bit_cast<std::uint32_t>(value)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n, const char* what) {
    if (pos_ + n > data_.size())
      throw FormatError(std::string("checkpoint truncated reading ") + what + ": need " +
                        std::to_string(pos_ + n) + " bytes, have " + std::to_string(data_.size()));
  }
  template <typename T>
  T uint(const char* what) {
    need(sizeof(T), what);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return value;
  }
  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return out;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>("tensor payload")); }
  bool done() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(StageTag tag) {
  switch (tag) {
    case StageTag::kInit: return "init";
    case StageTag::kGeneric: return "generic";
    case StageTag::kDapt: return "dapt";
    case StageTag::kFinetuned: return "finetuned";
  }
  return "init";
}

StageTag parse_stage_tag(std::string_view text) {
  if (text == "init") return StageTag::kInit;
  if (text == "generic") return StageTag::kGeneric;
  if (text == "dapt") return StageTag::kDapt;
  if (text == "finetuned") return StageTag::kFinetuned;
  throw FormatError("unknown stage tag '" + std::string(text) + "'");
}

Checkpoint random_checkpoint(const ModelConfig& cfg, std::uint64_t seed) {
  return Checkpoint{cfg, StageTag::kInit, init_parameters(cfg, seed)};
}

void validate_checkpoint(const Checkpoint& ckpt) {
  const auto registry = parameter_registry(ckpt.config);
  if (registry.size() != ckpt.params.size())
    throw FormatError("checkpoint has " + std::to_string(ckpt.params.size()) +
                      " tensors, model registry has " + std::to_string(registry.size()));
  for (const auto& spec : registry) {
    if (!ckpt.params.contains(spec.name)) throw FormatError("checkpoint lacks tensor '" + spec.name + "'");
    const auto& t = ckpt.params.at(spec.name);
    if (t.shape() != spec.shape)
      throw FormatError("tensor '" + spec.name + "' has shape " + to_string(t.shape()) +
                        ", expected " + to_string(spec.shape));
  }
}

Checkpoint with_classifier_head(const Checkpoint& ckpt) {
  if (ckpt.config.head == HeadType::kLinearClassifier) return ckpt;
  Checkpoint out;
  out.config = ckpt.config;
  out.config.head = HeadType::kLinearClassifier;
  out.stage = ckpt.stage;
  for (const auto& spec : parameter_registry(out.config)) {
    if (ckpt.params.contains(spec.name)) {
      out.params.add(spec.name, ckpt.params.at(spec.name));
    } else {
      out.params.add(spec.name, Tensor<float>(spec.shape));  // head: zero init
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  validate_checkpoint(ckpt);
  KeyValueText text = ckpt.config.to_text();
  text.set("stage", to_string(ckpt.stage));
  const std::string blob = text.to_string();

  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(blob.size()));
  w.bytes(blob.data(), blob.size());
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& e : ckpt.params.entries()) {
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(e.value.rank()));
    for (Index d : e.value.shape()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (Index i = 0; i < e.value.size(); ++i) w.f32(e.value[i]);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not an MVTC checkpoint (bad magic)");
  r.text(4, "magic");
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto blob_size = r.uint<std::uint32_t>("config length");
  const KeyValueText text = KeyValueText::parse(r.text(blob_size, "config"));

  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_text(text);
  ckpt.stage = parse_stage_tag(text.at("stage"));
  const auto count = r.uint<std::uint32_t>("tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_size = r.uint<std::uint16_t>("tensor name length");
    std::string name = r.text(name_size, "tensor name");
    const auto rank = r.uint<std::uint8_t>("tensor rank");
    if (rank == 0) throw FormatError("tensor '" + name + "' has rank 0");
    Shape shape;
    for (int d = 0; d < rank; ++d) shape.push_back(r.uint<std::uint32_t>("tensor dims"));
    for (Index d : shape)
      if (d <= 0) throw FormatError("tensor '" + name + "' has a zero dimension");
    const std::size_t payload = 4 * static_cast<std::size_t>(shape_size(shape));
    r.need(payload, ("payload of '" + name + "'").c_str());
    Tensor<float> t(shape);
    for (Index i = 0; i < t.size(); ++i) t[i] = r.f32();
    if (ckpt.params.contains(name)) throw FormatError("duplicate tensor '" + name + "'");
    ckpt.params.add(std::move(name), std::move(t));
  }
  if (!r.done())
    throw FormatError("trailing bytes after tensor table at offset " + std::to_string(r.position()));
  validate_checkpoint(ckpt);
  return ckpt;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path);
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace tadvit
