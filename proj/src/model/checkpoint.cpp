// Copyright 2026 The acrnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "acrnn/checkpoint.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "acrnn/binary_io.hpp"
#include "acrnn/errors.hpp"

namespace acrnn::model {

namespace {

constexpr std::string_view kMagic = "ACRN";

// Architecture fields stored as one float tensor so the file stays a plain
// list of named tensors.
std::vector<float> encode_config(const AcrnnConfig& c) {
  std::vector<float> v{static_cast<float>(c.num_classes),
                       static_cast<float>(static_cast<int>(c.placement)),
                       static_cast<float>(static_cast<int>(c.rnn_attention_form)),
                       static_cast<float>(c.input_freq),
                       static_cast<float>(c.input_time),
                       static_cast<float>(c.gru_hidden),
                       static_cast<float>(c.dropout_p),
                       static_cast<float>(c.l2_coeff),
                       static_cast<float>(c.init_std)};
  for (std::size_t ch : c.channels) v.push_back(static_cast<float>(ch));
  return v;
}

AcrnnConfig decode_config(const std::vector<float>& v) {
  if (v.size() != 17) throw FormatError("checkpoint: meta.config has " + std::to_string(v.size()) + " values");
  auto count = [](float f) {
    if (!(f >= 0.0f) || f != static_cast<float>(static_cast<std::size_t>(f))) {
      throw FormatError("checkpoint: meta.config holds a non-integer count");
    }
    return static_cast<std::size_t>(f);
  };
  AcrnnConfig c;
  c.num_classes = count(v[0]);
  const std::size_t placement = count(v[1]);
  const std::size_t form = count(v[2]);
  if (placement > 5 || form > 1) throw FormatError("checkpoint: meta.config has an unknown placement or form");
  c.placement = static_cast<Placement>(placement);
  c.rnn_attention_form = static_cast<AttentionForm>(form);
  c.input_freq = count(v[3]);
  c.input_time = count(v[4]);
  c.gru_hidden = count(v[5]);
  c.dropout_p = v[6];
  c.l2_coeff = v[7];
  c.init_std = v[8];
  for (std::size_t i = 0; i < 8; ++i) c.channels[i] = count(v[9 + i]);
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: invalid architecture: ") + e.what());
  }
  return c;
}

}  // namespace

std::string encode_checkpoint(const std::vector<CheckpointEntry>& entries) {
  io::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (ad::shape_numel(e.shape) != e.values.size()) throw DimensionError("checkpoint: tensor '" + e.name + "' size");
    if (e.shape.size() > std::numeric_limits<std::uint8_t>::max()) throw ContractError("checkpoint: rank too large");
    w.put_string16(e.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.shape.size()));
    for (std::size_t d : e.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put_floats(e.values);
  }
  return w.bytes();
}

std::vector<CheckpointEntry> decode_checkpoint(std::string_view bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.get_bytes(4) != kMagic) throw FormatError("checkpoint: bad magic (not an ACRN file)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<CheckpointEntry> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = r.get_string16();
    const auto rank = r.get<std::uint8_t>();
    for (std::uint8_t d = 0; d < rank; ++d) e.shape.push_back(r.get<std::uint32_t>());
    const std::size_t n = ad::shape_numel(e.shape);
    if (n > r.remaining() / sizeof(float)) throw FormatError("checkpoint: tensor '" + e.name + "' is truncated");
    e.values.resize(n);
    r.get_floats(e.values);
    out.push_back(std::move(e));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after last tensor");
  return out;
}

std::vector<CheckpointEntry> model_entries(const Acrnn<float>& model, const std::optional<dsp::NormStats>& norm) {
  std::vector<CheckpointEntry> out;
  const auto meta = encode_config(model.config());
  out.push_back({"meta.config", {meta.size()}, meta});
  for (const auto& p : model.parameters()) out.push_back({p.name, p.tensor.shape(), p.tensor.to_vector()});
  if (norm) {
    out.push_back({"norm.mean", {dsp::kChannels}, {norm->mean.begin(), norm->mean.end()}});
    out.push_back({"norm.std", {dsp::kChannels}, {norm->std.begin(), norm->std.end()}});
  }
  return out;
}

SavedModel model_from_entries(const std::vector<CheckpointEntry>& entries) {
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) {
    if (!by_name.emplace(e.name, &e).second) throw FormatError("checkpoint: duplicate tensor '" + e.name + "'");
  }
  auto find = [&](const std::string& name) -> const CheckpointEntry* {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second;
  };
  const auto* meta = find("meta.config");
  if (!meta) throw FormatError("checkpoint: missing meta.config");

  SavedModel saved{Acrnn<float>::build(decode_config(meta->values), 0), std::nullopt};
  std::size_t used = 1;
  for (const auto& p : saved.model.parameters()) {
    const auto* e = find(p.name);
    if (!e) throw FormatError("checkpoint: missing tensor '" + p.name + "'");
    if (e->shape != p.tensor.shape()) {
      throw FormatError("checkpoint: tensor '" + p.name + "' has shape " + ad::shape_str(e->shape) + ", expected " +
                        ad::shape_str(p.tensor.shape()));
    }
    auto dst = saved.model.at(p.name).mutable_data();
    std::copy(e->values.begin(), e->values.end(), dst.begin());
    ++used;
  }
  const auto* mean = find("norm.mean");
  const auto* sd = find("norm.std");
  if (mean || sd) {
    if (!mean || !sd || mean->values.size() != dsp::kChannels || sd->values.size() != dsp::kChannels) {
      throw FormatError("checkpoint: incomplete normalization statistics");
    }
    dsp::NormStats stats;
    std::copy(mean->values.begin(), mean->values.end(), stats.mean.begin());
    std::copy(sd->values.begin(), sd->values.end(), stats.std.begin());
    saved.norm = stats;
    used += 2;
  }
  if (used != entries.size()) throw FormatError("checkpoint: unexpected extra tensors");
  return saved;
}

void save_model(const std::filesystem::path& path, const Acrnn<float>& model,
                const std::optional<dsp::NormStats>& norm) {
  io::write_file_atomic(path, encode_checkpoint(model_entries(model, norm)));
}

SavedModel load_model(const std::filesystem::path& path) {
  return model_from_entries(decode_checkpoint(io::read_file(path)));
}

}  // namespace acrnn::model
