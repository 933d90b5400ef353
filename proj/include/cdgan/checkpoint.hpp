#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdgan/serialize.hpp"

namespace cdgan {

/// Single-file checkpoint container: magic, format version, a JSON header
/// describing configs and a tensor directory, then raw doubles. Offsets are
/// element counts into the payload. Byte order is the host's (little-endian
/// on every supported platform).

inline constexpr char kContainerMagic[4] = {'C', 'D', 'G', 'N'};
inline constexpr uint32_t kContainerVersion = 1;

class ContainerWriter {
 public:
  explicit ContainerWriter(std::string kind) : kind_(std::move(kind)) {}

  /// Registers a tensor under `key`. Tensors sharing storage are written
  /// once and their keys point at the same payload block.
  void add(const std::string& key, const Tensor* t) {
    if (directory_.count(key)) throw ValueError("checkpoint: duplicate key " + key);
    auto it = offset_of_.find(t);
    int64_t offset;
    if (it != offset_of_.end()) {
      offset = it->second;
    } else {
      offset = next_offset_;
      next_offset_ += t->numel();
      offset_of_.emplace(t, offset);
      blocks_.push_back(t);
    }
    directory_[key] = {t->shape(), offset};
  }

  /// Arbitrary extra header fields, merged into the JSON root.
  void set_meta(const std::string& field, json value) { meta_[field] = std::move(value); }

  void write(const std::string& path) const {
    json header = meta_;
    header["kind"] = kind_;
    json dir = json::object();
    for (const auto& [key, entry] : directory_) {
      dir[key] = {{"shape", entry.shape}, {"offset", entry.offset}};
    }
    header["tensors"] = std::move(dir);
    const std::string head = header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
    os.write(kContainerMagic, 4);
    const uint32_t version = kContainerVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t head_len = head.size();
    os.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const Tensor* t : blocks_) {
      os.write(reinterpret_cast<const char*>(t->data()),
               static_cast<std::streamsize>(t->numel() * static_cast<int64_t>(sizeof(Scalar))));
    }
    if (!os) throw IoError("checkpoint: short write to " + path);
  }

 private:
  struct Entry {
    std::array<int, 4> shape;
    int64_t offset;
  };
  std::string kind_;
  json meta_ = json::object();
  std::map<std::string, Entry> directory_;
  std::unordered_map<const Tensor*, int64_t> offset_of_;
  std::vector<const Tensor*> blocks_;
  int64_t next_offset_ = 0;
};

class ContainerReader {
 public:
  explicit ContainerReader(const std::string& path) : is_(path, std::ios::binary), path_(path) {
    if (!is_) throw IoError("checkpoint: cannot open " + path);
    char magic[4];
    is_.read(magic, 4);
    if (!is_ || std::string(magic, 4) != std::string(kContainerMagic, 4)) {
      throw IoError("checkpoint: " + path + " is not a checkpoint container");
    }
    uint32_t version = 0;
    is_.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is_ || version != kContainerVersion) {
      throw IoError("checkpoint: unsupported container version " + std::to_string(version));
    }
    uint64_t head_len = 0;
    is_.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    is_.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!is_) throw IoError("checkpoint: truncated header in " + path);
    try {
      header_ = json::parse(head);
    } catch (const json::exception& e) {
      throw IoError("checkpoint: malformed header in " + path + ": " + e.what());
    }
    payload_base_ = static_cast<int64_t>(4 + sizeof(uint32_t) + sizeof(uint64_t) + head_len);
    if (!header_.contains("tensors") || !header_["tensors"].is_object()) {
      throw IoError("checkpoint: header lacks a tensor directory in " + path);
    }
  }

  const json& header() const { return header_; }

  std::string kind() const { return header_.value("kind", std::string()); }

  bool has(const std::string& key) const { return header_["tensors"].contains(key); }

  std::array<int, 4> shape(const std::string& key) const {
    return entry(key).at("shape").get<std::array<int, 4>>();
  }

  /// Reads the named block into `dst`, which must already have its shape.
  void read_into(const std::string& key, Tensor& dst) {
    const json& e = entry(key);
    const auto shp = e.at("shape").get<std::array<int, 4>>();
    if (shp != dst.shape()) {
      throw ShapeError("checkpoint: tensor " + key + " has shape mismatch in " + path_);
    }
    const int64_t offset = e.at("offset").get<int64_t>();
    is_.seekg(payload_base_ + offset * static_cast<int64_t>(sizeof(Scalar)));
    is_.read(reinterpret_cast<char*>(dst.data()),
             static_cast<std::streamsize>(dst.numel() * static_cast<int64_t>(sizeof(Scalar))));
    if (!is_) throw IoError("checkpoint: truncated payload reading " + key + " from " + path_);
  }

  Tensor read(const std::string& key) {
    const auto shp = shape(key);
    Tensor t(shp[0], shp[1], shp[2], shp[3]);
    read_into(key, t);
    return t;
  }

  int64_t offset_of(const std::string& key) const { return entry(key).at("offset").get<int64_t>(); }

 private:
  const json& entry(const std::string& key) const {
    const json& dir = header_["tensors"];
    auto it = dir.find(key);
    if (it == dir.end()) throw IoError("checkpoint: missing tensor " + key + " in " + path_);
    return *it;
  }

  std::ifstream is_;
  std::string path_;
  json header_;
  int64_t payload_base_ = 0;
};

/// Saves the model: config, tied-group list, and every parameter tensor
/// keyed network/layer/name (tied twins share one payload block).
inline void save_model_into(ContainerWriter& w, const Model& m) {
  w.set_meta("model_config", json(m.config));
  w.set_meta("tied_groups", json(m.tied_groups));
  for (const NamedParam& p : named_params(m)) w.add(p.key, p.tensor.get());
}

/// Rebuilds a model from a container produced by save_model_into. Validates
/// config-implied tying against the stored groups and checks that tied
/// twins carry identical data in the file.
inline Model load_model_from(ContainerReader& r) {
  if (!r.header().contains("model_config")) {
    throw IoError("checkpoint: header lacks model_config");
  }
  const ModelConfig cfg = r.header().at("model_config").get<ModelConfig>();
  cfg.validate();
  Model m = build_model(cfg, 0);

  const auto stored_groups = r.header().value("tied_groups", std::vector<TiedGroup>{});
  if (stored_groups.size() != m.tied_groups.size()) {
    throw IoError("checkpoint: tied-group list does not match the stored config");
  }
  for (size_t i = 0; i < stored_groups.size(); ++i) {
    const TiedGroup &a = stored_groups[i], &b = m.tied_groups[i];
    if (a.network_a != b.network_a || a.layer_a != b.layer_a || a.network_b != b.network_b ||
        a.layer_b != b.layer_b) {
      throw IoError("checkpoint: tied-group list does not match the stored config");
    }
  }

  for (const NamedParam& p : named_params(m)) r.read_into(p.key, *p.tensor);

  // tied twins must be bit-identical in the file itself
  for (const TiedGroup& g : m.tied_groups) {
    const auto& pa = m.network(g.network_a).layers[static_cast<size_t>(g.layer_a)].params;
    for (const auto& [pname, tensor] : pa) {
      (void)tensor;
      const std::string key_a = g.network_a + "/" + std::to_string(g.layer_a) + "/" + pname;
      const std::string key_b = g.network_b + "/" + std::to_string(g.layer_b) + "/" + pname;
      if (r.offset_of(key_a) != r.offset_of(key_b) &&
          Tensor::max_abs_diff(r.read(key_a), r.read(key_b)) != 0.0) {
        throw IoError("checkpoint: tied parameters " + key_a + " and " + key_b + " diverge");
      }
    }
  }
  return m;
}

inline void save_model(const Model& m, const std::string& path) {
  ContainerWriter w("model");
  save_model_into(w, m);
  w.write(path);
}

inline Model load_model(const std::string& path) {
  ContainerReader r(path);
  if (r.kind() != "model" && r.kind() != "trainer") {
    throw IoError("checkpoint: " + path + " does not hold a model");
  }
  return load_model_from(r);
}

}  // namespace cdgan
